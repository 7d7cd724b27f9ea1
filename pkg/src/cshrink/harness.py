"""Monte Carlo risk experiments.

Replicate ``r`` draws ``Z`` and then ``S`` from ``RngStream(seed, r)``, so a
replicate's numbers never depend on which worker ran it.  Means and standard
errors are accumulated with ``math.fsum`` (exactly rounded), which makes the
reports independent of worker count and reduction order.
"""
import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import cmatrix as cm
from . import risk
from .errors import (
    BranchMismatch,
    ConfigInvalid,
    ConfigParseError,
    DegenerateSample,
    DegenerateSpectrum,
    DimensionMismatch,
    NotPositiveDefinite,
)
from .estimators import EstimatorSpec, known_shrink, unknown_shrink
from .sampling import ModelParams, RngStream, sample_cn_matrix, sample_cwishart

CSV_COLUMNS = ("estimator_id", "m", "p", "n", "xi_mode", "xi_scale", "reps_used", "discarded",
               "empirical_risk", "risk_se", "ure_mean", "ure_se", "baseline")
XI_MODES = ("zero", "literal", "scaled_random")
XI_STREAM = (1 << 64) - 1  # reserved stream index for the fixed random mean
MIN_REPS = 100


@dataclass
class ModelConfig:
    m: int
    p: int
    n: int
    xi_mode: str = "zero"
    xi_scale: float = 0.0
    xi_seed: Optional[int] = None
    xi_matrix: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None  # None means identity
    k: Optional[np.ndarray] = None

    def xi(self, seed):
        if self.xi_mode == "zero":
            return np.zeros((self.m, self.p), complex)
        if self.xi_mode == "literal":
            return cm.as_cmatrix(self.xi_matrix)
        stream = RngStream(seed if self.xi_seed is None else self.xi_seed, XI_STREAM)
        return self.xi_scale * stream.standard_cn((self.m, self.p))

    def params(self, seed):
        return ModelParams(self.m, self.p, self.n, self.xi(seed), self.sigma, self.k)


@dataclass
class ExperimentConfig:
    model: ModelConfig
    estimators: List[EstimatorSpec]
    reps: int
    seed: int
    loss: str = "invariant"
    gap_threshold: float = cm.GAP_TOL

    def validate(self):
        if not self.estimators:
            raise ConfigInvalid("estimator list is empty")
        if self.reps < MIN_REPS:
            raise ConfigInvalid(f"reps must be at least {MIN_REPS}, got {self.reps}")
        if self.loss not in ("known", "invariant"):
            raise ConfigInvalid(f"loss must be 'known' or 'invariant', got '{self.loss}'")
        if self.model.xi_mode not in XI_MODES:
            raise ConfigInvalid(f"xi mode must be one of {XI_MODES}, got '{self.model.xi_mode}'")
        if not self.gap_threshold >= 0:
            raise ConfigInvalid("gap_threshold must be non-negative")
        m, p = self.model.m, self.model.p
        for spec in self.estimators:
            try:
                spec.check_dims(m, p)
            except BranchMismatch as exc:
                raise ConfigInvalid(f"estimator '{spec.estimator_id}': {exc}") from exc
        ids = [spec.estimator_id for spec in self.estimators]
        if len(set(ids)) != len(ids):
            raise ConfigInvalid(f"estimator ids must be unique, got {ids}; add an 'id' field")
        try:
            self.model.params(self.seed)
        except (DimensionMismatch, NotPositiveDefinite) as exc:
            raise ConfigInvalid(f"model: {exc}") from exc
        return self


@dataclass
class RiskReport:
    estimator_id: str
    empirical_risk: float
    risk_se: float
    ure_mean: float
    ure_se: float
    baseline: float
    discarded: int
    reps_used: int
    m: int = 0
    p: int = 0
    n: int = 0
    xi_mode: str = "zero"
    xi_scale: float = 0.0


@dataclass
class _Context:
    """Per-experiment constants shared by every replicate."""

    params: ModelParams
    specs: List[EstimatorSpec]
    profiles: list
    loss: str
    gap_threshold: float
    sigma_inv: np.ndarray = field(default=None)
    k_inv: np.ndarray = field(default=None)
    k_isqrt: np.ndarray = field(default=None)
    k_sqrt: np.ndarray = field(default=None)
    sigma_isqrt: np.ndarray = field(default=None)
    ure_valid: bool = True

    @classmethod
    def build(cls, config):
        params = config.model.params(config.seed)
        m, p, n = params.m, params.p, params.n
        profiles = [None if spec.kind == "mle" else spec.resolve_profile(m, p, n)
                    for spec in config.estimators]
        ctx = cls(params, list(config.estimators), profiles, config.loss, config.gap_threshold)
        ctx.sigma_inv = cm.inv_hpd(params.sigma)
        ctx.k_inv = cm.inv_hpd(params.k)
        ctx.k_sqrt = params.k_sqrt
        ctx.k_isqrt = cm.inv_sqrt_herm(params.k)
        ctx.sigma_isqrt = cm.inv_sqrt_herm(params.sigma)
        # the URE targets the invariant loss; it equals the plain loss only for identity covariances
        ctx.ure_valid = config.loss == "invariant" or (params.sigma_is_identity and params.k_is_identity)
        return ctx

    def loss_of(self, xi_hat):
        if self.loss == "known":
            return risk.loss_known(xi_hat, self.params.xi)
        return risk.loss_invariant(xi_hat, self.params.xi, None, None, self.sigma_inv, self.k_inv)

    def evaluate(self, spec, profile, z, s):
        """(loss, ure) for one estimator; raises DegenerateSpectrum on a discarded replicate."""
        params = self.params
        m, p, n = params.m, params.p, params.n
        if spec.kind == "mle":
            return self.loss_of(z), float(m * p)
        zw = self.k_isqrt @ z
        if spec.covariance == "known":
            zw = zw @ self.sigma_isqrt
            est, ell = known_shrink(zw, profile)
            xi_hat = self.k_sqrt @ est @ params.sigma_sqrt
            ure = risk.ure_known_from_eigs(ell, profile, m, self.gap_threshold)
        else:
            est, f = unknown_shrink(zw, s, profile, gap_tol=0.0)
            xi_hat = self.k_sqrt @ est
            ure = risk.ure_unknown_from_eigs(f, n, m, p, profile, self.gap_threshold)
        if ure.degenerate_flag or not math.isfinite(ure.value):
            raise DegenerateSpectrum("replicate has a near-degenerate spectrum")
        return self.loss_of(xi_hat), ure.value


def _run_chunk(config, start, stop):
    """Per-replicate losses/URE for replicates ``[start, stop)``; NaN marks a discard."""
    ctx = _Context.build(config)
    count = stop - start
    losses = np.full((len(ctx.specs), count), np.nan)
    ures = np.full((len(ctx.specs), count), np.nan)
    params = ctx.params
    for i, r in enumerate(range(start, stop)):
        stream = RngStream(config.seed, r)
        z = sample_cn_matrix(params, stream)
        try:
            s = sample_cwishart(params.sigma, params.n, stream, sigma_sqrt=params.sigma_sqrt)
        except DegenerateSample:
            continue
        for e, (spec, profile) in enumerate(zip(ctx.specs, ctx.profiles)):
            try:
                losses[e, i], ures[e, i] = ctx.evaluate(spec, profile, z, s)
            except (DegenerateSpectrum, NotPositiveDefinite):
                pass
    return losses, ures


def _mean_se(x):
    x = list(map(float, x))
    if not x:
        return float("nan"), float("nan")
    mean = math.fsum(x) / len(x)
    if len(x) < 2:
        return mean, float("nan")
    var = math.fsum((v - mean) ** 2 for v in x) / (len(x) - 1)
    return mean, math.sqrt(var / len(x))


def _chunks(reps, workers):
    size = max(1, math.ceil(reps / max(1, workers)))
    return [(a, min(reps, a + size)) for a in range(0, reps, size)]


def run_experiment(config, workers=1):
    """Run every estimator in ``config`` over ``config.reps`` replicates."""
    config.validate()
    if workers > 1:
        if any(spec.profile is not None for spec in config.estimators):
            raise ConfigInvalid("code-level profiles cannot be shipped to worker processes; use workers=1")
        parts = _chunks(config.reps, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, [config] * len(parts),
                                    [a for a, _ in parts], [b for _, b in parts]))
        losses = np.concatenate([r[0] for r in results], axis=1)
        ures = np.concatenate([r[1] for r in results], axis=1)
    else:
        losses, ures = _run_chunk(config, 0, config.reps)

    ctx_ure_valid = _Context.build(config).ure_valid
    model = config.model
    reports = []
    for e, spec in enumerate(config.estimators):
        ok = np.isfinite(losses[e]) & np.isfinite(ures[e])
        used = int(ok.sum())
        risk_mean, risk_se = _mean_se(losses[e][ok])
        if ctx_ure_valid:
            ure_mean, ure_se = _mean_se(ures[e][ok])
        else:
            ure_mean, ure_se = float("nan"), float("nan")
        reports.append(RiskReport(
            estimator_id=spec.estimator_id,
            empirical_risk=risk_mean,
            risk_se=risk_se,
            ure_mean=ure_mean,
            ure_se=ure_se,
            baseline=float(model.m * model.p),
            discarded=config.reps - used,
            reps_used=used,
            m=model.m,
            p=model.p,
            n=model.n,
            xi_mode=model.xi_mode,
            xi_scale=float(model.xi_scale) if model.xi_mode == "scaled_random" else 0.0,
        ))
    return reports


# -- persistence -------------------------------------------------------------


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_report_csv(reports, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rep in reports:
            writer.writerow([_fmt(getattr(rep, col)) for col in CSV_COLUMNS])


def read_report_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _matrix_or_identity(value, field_name):
    if value is None or value == "identity":
        return None
    if not isinstance(value, dict):
        raise ConfigParseError("expected a matrix object or \"identity\"", field=field_name)
    try:
        return cm.from_json(value)
    except DimensionMismatch as exc:
        raise ConfigParseError(str(exc), field=field_name) from exc


def _require(obj, key, prefix, kind=int):
    name = f"{prefix}.{key}" if prefix else key
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigParseError("missing required field", field=name)
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigParseError(f"expected an integer, got {value!r}", field=name)
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigParseError(f"expected a number, got {value!r}", field=name)
    if kind is str and not isinstance(value, str):
        raise ConfigParseError(f"expected a string, got {value!r}", field=name)
    return value


def config_from_dict(obj):
    if not isinstance(obj, dict):
        raise ConfigParseError("top level must be a JSON object")
    model = obj.get("model")
    if not isinstance(model, dict):
        raise ConfigParseError("missing or non-object field", field="model")
    m, p, n = (_require(model, key, "model") for key in ("m", "p", "n"))
    xi = model.get("xi", {"mode": "zero"})
    if not isinstance(xi, dict):
        raise ConfigParseError("expected an object", field="model.xi")
    mode = _require(xi, "mode", "model.xi", str)
    if mode not in XI_MODES:
        raise ConfigParseError(f"must be one of {XI_MODES}, got '{mode}'", field="model.xi.mode")
    scale, xi_seed, xi_matrix = 0.0, None, None
    if mode == "scaled_random":
        scale = float(_require(xi, "scale", "model.xi", float))
        if "seed" in xi:
            xi_seed = _require(xi, "seed", "model.xi")
    elif mode == "literal":
        if "matrix" not in xi:
            raise ConfigParseError("missing required field", field="model.xi.matrix")
        xi_matrix = _matrix_or_identity(xi["matrix"], "model.xi.matrix")
    model_cfg = ModelConfig(m, p, n, mode, scale, xi_seed, xi_matrix,
                            _matrix_or_identity(model.get("sigma"), "model.sigma"),
                            _matrix_or_identity(model.get("k"), "model.k"))
    raw_est = obj.get("estimators")
    if not isinstance(raw_est, list):
        raise ConfigParseError("expected a list", field="estimators")
    estimators = []
    for i, entry in enumerate(raw_est):
        try:
            estimators.append(EstimatorSpec.from_json(entry))
        except ConfigInvalid as exc:
            raise ConfigParseError(str(exc), field=f"estimators[{i}]") from exc
    loss = obj.get("loss", "invariant")
    if loss not in ("known", "invariant"):
        raise ConfigParseError(f"must be 'known' or 'invariant', got {loss!r}", field="loss")
    gap = obj.get("gap_threshold", cm.GAP_TOL)
    if isinstance(gap, bool) or not isinstance(gap, (int, float)):
        raise ConfigParseError(f"expected a number, got {gap!r}", field="gap_threshold")
    seed = _require(obj, "seed", "")
    if not 0 <= seed < (1 << 64):
        raise ConfigParseError("must be an unsigned 64-bit integer", field="seed")
    return ExperimentConfig(model_cfg, estimators, _require(obj, "reps", ""), seed, loss, float(gap))


def config_to_dict(config):
    model = config.model
    xi = {"mode": model.xi_mode}
    if model.xi_mode == "scaled_random":
        xi["scale"] = model.xi_scale
        if model.xi_seed is not None:
            xi["seed"] = model.xi_seed
    elif model.xi_mode == "literal":
        xi["matrix"] = cm.to_json(model.xi_matrix)
    return {
        "model": {
            "m": model.m, "p": model.p, "n": model.n, "xi": xi,
            "sigma": "identity" if model.sigma is None else cm.to_json(model.sigma),
            "k": "identity" if model.k is None else cm.to_json(model.k),
        },
        "estimators": [spec.to_json() for spec in config.estimators],
        "reps": config.reps,
        "seed": config.seed,
        "loss": config.loss,
        "gap_threshold": config.gap_threshold,
    }


def read_config_json(path):
    """Parse and validate an experiment config file."""
    with open(path) as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, line=exc.lineno) from exc
    return config_from_dict(obj).validate()


def write_config_json(config, path):
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")

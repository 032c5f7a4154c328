"""Experiment configuration: JSON parsing, defaults and validation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .datum import (ENVELOPES, DatumError, InitialDatum, datum_from_records, gaussian_datum,
                    make_threshold_datum)
from .experiments import (FIT_T_MIN, LOWER_T_MIN, TimeLadder, classify_case, default_datum,
                          flattened_threshold_datum, zero_moment_datum)
from .quadrature import QuadConfig

EXPERIMENTS: dict[str, str] = {
    "thm41": "E0·u0 minus the moment profile A_0^[gamma], low frequencies (upper rate)",
    "thm42": "E1·u1 minus the moment profile A_1^[gamma], low frequencies (upper rate)",
    "thm43": "low-frequency solution norm, two-sided rate (sqrt t, sqrt log t, t^(-n/8+1/4))",
    "thm44": "u minus the leading diffusion wave A_1^0, two-sided rate t^(-n/8)",
    "thm45": "u minus A_1^1 and A_0^0, two-sided rate t^(-n/8-1/4)",
    "thm46": "u minus C^k on the high-frequency shell, rate t^(-(l+3k+4)/2)",
    "thm47": "full-space residual for the (n, l) case map",
    "thm61": "u minus C^k in full space, k >= (n-18)/12, two-sided t^(-n/8+1/4)",
    "thm62": "u minus A_1^0 and C^k in full space, k >= (n-16)/12, two-sided t^(-n/8)",
    "thm63": "u minus A_1^1, A_0^0 and C^k in full space, k >= (n-14)/12, two-sided t^(-n/8-1/4)",
    "lemma7": "growth of the diffusion-wave integral over the unit ball",
    "sweep-l": "solution-norm and case-residual slopes across Sobolev orders l",
    "sweep-k": "slopes of u minus C^k across expansion orders k",
    "kernel-check": "kernel ODE residual, branch continuity, root identities, C^0 identity",
}

NEEDS_L = {"thm47", "sweep-l"}
MIN_N = {"thm61": 3, "thm62": 3, "thm63": 3}
K_THRESHOLD = {"thm61": 18, "thm62": 16, "thm63": 14}
DATUM_KINDS = ("gaussian", "threshold", "flat-threshold", "zero-moment", "default")


class ConfigError(ValueError):
    """Invalid experiment config; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class LadderSpec:
    t0: float = 2.0**8
    ratio: float = 2.0
    J: int = 8

    def build(self) -> TimeLadder:
        return TimeLadder(self.t0, self.ratio, self.J)


@dataclass(frozen=True)
class DatumSpec:
    """Either a named family or explicit component records."""

    kind: str = "default"
    eps: float = 0.02
    records: tuple[dict, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    n: int = 1
    l: float | None = None
    gamma: float | None = None
    k: int | None = None
    l_values: tuple[float, ...] = ()
    k_values: tuple[int, ...] = ()
    datum: DatumSpec = field(default_factory=DatumSpec)
    ladder: LadderSpec = field(default_factory=LadderSpec)
    quad: dict = field(default_factory=dict)
    out: str = "sdlab-out"

    def canonical(self) -> dict:
        """Everything that determines the numbers (the output directory does not)."""
        d = asdict(self)
        d.pop("out")
        d["datum"]["records"] = [dict(sorted(r.items())) for r in self.datum.records]
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def quad_config(self) -> QuadConfig:
        return QuadConfig(**self.quad)

    def build_datum(self) -> InitialDatum:
        n = self.n
        l = self.l if self.l is not None else 0.0
        spec = self.datum
        if spec.records:
            gamma = self.gamma if self.gamma is not None else 2.0
            return datum_from_records(n, spec.records, l, gamma)
        kind = spec.kind
        if kind == "default":
            return default_datum(self.id, n, l, spec.eps)
        if kind == "gaussian":
            return gaussian_datum(n)
        if kind == "threshold":
            return make_threshold_datum(n, l, spec.eps)
        if kind == "flat-threshold":
            return flattened_threshold_datum(n, l, spec.eps)
        return zero_moment_datum(n)


_TOP_KEYS = {"id", "n", "l", "gamma", "k", "l_values", "k_values", "datum", "ladder", "quad", "out"}


def _number(raw: dict, key: str, path: str, *, integer: bool = False, lo=None, hi=None,
            default=None):
    if key not in raw or raw[key] is None:
        return default
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {v!r}")
    if integer and not float(v).is_integer():
        raise ConfigError(f"{path}{key}", f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{path}{key}", "must be finite")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}{key}", f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}{key}", f"must be <= {hi}, got {v}")
    return int(v) if integer else float(v)


def _parse_ladder(raw: Any) -> LadderSpec:
    if raw is None:
        return LadderSpec()
    if not isinstance(raw, dict):
        raise ConfigError("ladder", "expected an object")
    unknown = set(raw) - {"t0", "ratio", "J"}
    if unknown:
        raise ConfigError(f"ladder.{sorted(unknown)[0]}", "unknown field")
    base = LadderSpec()
    return LadderSpec(_number(raw, "t0", "ladder.", lo=1.0, default=base.t0),
                      _number(raw, "ratio", "ladder.", lo=1.0 + 1e-9, default=base.ratio),
                      _number(raw, "J", "ladder.", integer=True, lo=4, hi=64, default=base.J))


def _parse_records(raw: list) -> tuple[dict, ...]:
    out = []
    for i, rec in enumerate(raw):
        path = f"datum[{i}]"
        if not isinstance(rec, dict):
            raise ConfigError(path, "expected an object")
        unknown = set(rec) - {"side", "kind", "parameter", "beta", "amplitude"}
        if unknown:
            raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
        if rec.get("side") not in ("u0", "u1"):
            raise ConfigError(f"{path}.side", "must be 'u0' or 'u1'")
        kind = rec.get("kind", "gaussian")
        if kind not in ENVELOPES:
            raise ConfigError(f"{path}.kind", f"must be one of {sorted(ENVELOPES)}")
        beta = rec.get("beta", [])
        if not isinstance(beta, list) or not all(isinstance(b, int) and b >= 0 for b in beta):
            raise ConfigError(f"{path}.beta", "must be a list of nonnegative integers")
        parameter = _number(rec, "parameter", f"{path}.", default=1.0)
        amplitude = _number(rec, "amplitude", f"{path}.", default=1.0)
        out.append({"side": rec["side"], "kind": kind, "parameter": parameter,
                    "beta": list(beta), "amplitude": amplitude})
    return tuple(out)


def _parse_datum(raw: Any) -> DatumSpec:
    if raw is None:
        return DatumSpec()
    if isinstance(raw, list):
        if not raw:
            raise ConfigError("datum", "component list is empty")
        return DatumSpec(kind="records", records=_parse_records(raw))
    if not isinstance(raw, dict):
        raise ConfigError("datum", "expected a component list or an object")
    unknown = set(raw) - {"kind", "eps"}
    if unknown:
        raise ConfigError(f"datum.{sorted(unknown)[0]}", "unknown field")
    kind = raw.get("kind", "default")
    if kind not in DATUM_KINDS:
        raise ConfigError("datum.kind", f"must be one of {list(DATUM_KINDS)}")
    return DatumSpec(kind, _number(raw, "eps", "datum.", lo=1e-6, default=0.02))


def config_from_dict(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    eid = raw.get("id")
    if eid not in EXPERIMENTS:
        raise ConfigError("id", f"must be one of {sorted(EXPERIMENTS)}, got {eid!r}")
    n = _number(raw, "n", "", integer=True, lo=1, hi=64,
                default=1 if eid == "kernel-check" else None)
    if n is None:
        raise ConfigError("n", "required")
    if n < MIN_N.get(eid, 1):
        raise ConfigError("n", f"{eid} needs n >= {MIN_N[eid]}")
    l = _number(raw, "l", "", lo=0.0)
    if eid in NEEDS_L and l is None and eid != "sweep-l":
        raise ConfigError("l", f"required for {eid}")
    gamma = _number(raw, "gamma", "", lo=0.0, hi=2.99)
    if eid == "thm42" and gamma is not None:
        if (n == 1 and not gamma > 0.5) or (n == 2 and not gamma > 0):
            raise ConfigError("gamma", f"n = {n} needs gamma > {0.5 if n == 1 else 0}")
    k = _number(raw, "k", "", integer=True, lo=0, hi=8)
    if eid in K_THRESHOLD:
        need = max(0, math.ceil((n - K_THRESHOLD[eid]) / 12))
        if k is None:
            k = need
        elif k < need:
            raise ConfigError("k", f"{eid} needs k >= (n-{K_THRESHOLD[eid]})/12, i.e. k >= {need}")
    if eid == "thm46" and k is None:
        k = 0

    l_values = raw.get("l_values", [])
    if eid == "sweep-l":
        if not isinstance(l_values, list) or not l_values:
            raise ConfigError("l_values", "required: a nonempty list of Sobolev orders")
        l_values = [_number({"v": v}, "v", f"l_values[{i}].", lo=0.0) for i, v in enumerate(l_values)]
    k_values = raw.get("k_values", [])
    if eid == "sweep-k":
        if not isinstance(k_values, list) or not k_values:
            raise ConfigError("k_values", "required: a nonempty list of orders")
        k_values = [_number({"v": v}, "v", f"k_values[{i}].", integer=True, lo=0, hi=8)
                    for i, v in enumerate(k_values)]

    quad = raw.get("quad", {}) or {}
    if not isinstance(quad, dict):
        raise ConfigError("quad", "expected an object")
    allowed = set(QuadConfig.__dataclass_fields__)
    for key in quad:
        if key not in allowed:
            raise ConfigError(f"quad.{key}", "unknown field")
    try:
        QuadConfig(**quad)
    except (TypeError, ValueError) as exc:
        raise ConfigError("quad", str(exc)) from exc

    out = raw.get("out", "sdlab-out")
    if not isinstance(out, str) or not out:
        raise ConfigError("out", "expected a nonempty path string")

    cfg = ExperimentConfig(eid, n, l, gamma, k, tuple(l_values), tuple(k_values),
                           _parse_datum(raw.get("datum")), _parse_ladder(raw.get("ladder")),
                           dict(sorted(quad.items())), out)
    if eid != "kernel-check":
        times = cfg.ladder.build().times
        if sum(t >= FIT_T_MIN for t in times) < 4 or times[-1] < LOWER_T_MIN:
            raise ConfigError("ladder", f"needs >= 4 times at t >= {FIT_T_MIN:g} "
                              f"and one at t >= {LOWER_T_MIN:g}")
    try:
        if eid not in ("lemma7", "kernel-check", "sweep-l", "sweep-k"):
            datum = cfg.build_datum()
            if eid in ("thm45", "thm63") and datum.weight_gamma < 2:
                raise ConfigError("gamma", f"{eid} needs second moments (gamma >= 2)")
    except (DatumError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("datum", str(exc)) from exc
    if eid == "thm47":
        classify_case(n, l)
    return cfg


def parse_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("<file>", f"{p} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"malformed JSON: {exc}") from exc
    return config_from_dict(raw)

"""Command-line front end: run configured experiments with caching, emit CSV and reports."""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import experiments as ex
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, parse_config
from .datum import InitialDatum
from .profiles import ProfileSpec

CSV_HEADER = "t,value,region,experiment_id"
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_CACHE = 0, 2, 3, 4


class CacheCorruptionError(RuntimeError):
    """A cached record does not match the digest it is filed under."""


@dataclass
class RunRecord:
    digest: str
    config: dict
    curves: list[ex.DecayCurve]
    fits: list[dict]
    verdicts: list[ex.Verdict]
    wall_clock: float = 0.0
    from_cache: bool = field(default=False, compare=False)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


# -- harness dispatch ---------------------------------------------------------------

class _Run:
    def __init__(self, cfg: ExperimentConfig, jobs: int):
        self.cfg = cfg
        self.jobs = jobs
        self.quad = cfg.quad_config()
        self.ladder = cfg.ladder.build()
        self.curves: list[ex.DecayCurve] = []
        self.fits: list[dict] = []
        self.verdicts: list[ex.Verdict] = []

    def add_curve(self, curve: ex.DecayCurve, tag: str | None = None) -> ex.DecayCurve:
        name = self.cfg.id if tag is None else f"{self.cfg.id}:{tag}"
        curve = ex.DecayCurve(curve.t, curve.values, name, curve.region, curve.datum_digest)
        self.curves.append(curve)
        return curve

    def fit(self, curve: ex.DecayCurve, model: str = "power", square: bool = False) -> ex.SlopeFit:
        part = curve.window(ex.FIT_T_MIN)
        if square:
            part = part.mapped(lambda v: v * v)
        f = ex.fit_decay(part, model)
        self.fits.append({"curve": curve.experiment_id, "model": model, "squared": square,
                          "slope": f.slope, "intercept": f.intercept,
                          "max_rel_residual": f.max_rel_residual, "r_squared": f.r_squared})
        return f

    def slope(self, name, curve, expected, tol, two_sided, square=False):
        try:
            f = self.fit(curve, square=square)
        except ex.DegenerateFitError as exc:
            self.verdicts.append(ex.Verdict(name, "degenerate", math.nan, expected, tol, str(exc)))
            return
        self.verdicts.append(ex.slope_verdict(name, f, expected, tol, two_sided))

    def lower(self, name, curve, bound):
        self.verdicts.append(ex.lower_verdict(name, ex.check_lower_bound(curve, bound)))

    def log_law(self, name, curve, square=True):
        part = curve.window(ex.FIT_T_MIN)
        if square:
            part = part.mapped(lambda v: v * v)
        check = ex.detect_log_law(part)
        for f in (check.power, check.log):
            self.fits.append({"curve": curve.experiment_id, "model": f.model, "squared": square,
                              "slope": f.slope, "intercept": f.intercept,
                              "max_rel_residual": f.max_rel_residual, "r_squared": f.r_squared})
        ratio = check.power.max_rel_residual / max(check.log.max_rel_residual, 1e-300)
        self.verdicts.append(ex.Verdict(
            name, "pass" if check.detected else "fail", ratio, 5.0, 0.0,
            f"log-law {'detected' if check.detected else 'not detected'}; "
            f"log-model R^2 {check.log.r_squared:.6f}"))

    def datum(self) -> InitialDatum:
        return self.cfg.build_datum()


def _gamma(cfg: ExperimentConfig, datum: InitialDatum) -> float:
    return cfg.gamma if cfg.gamma is not None else min(datum.weight_gamma, 2.0)


def _run_thm41_42(r: _Run, j: int) -> None:
    cfg = r.cfg
    n = cfg.n
    datum = r.datum()
    gamma = _gamma(cfg, datum)
    if j == 1 and ((n == 1 and gamma <= 0.5) or (n == 2 and gamma <= 0)):
        raise ConfigError("gamma", f"n = {n} needs a larger gamma for the E1 expansion")
    if gamma > datum.weight_gamma:
        raise ConfigError("gamma", f"datum only carries weight {datum.weight_gamma:g}")
    curve = r.add_curve(ex.run_kernel_side_residual(n, datum, j, gamma, r.ladder, r.quad, r.jobs))
    rate = n / 8 + gamma / 4 - 0.25 * j
    r.slope("rate", curve, -rate, ex.UPPER_TOL, False)
    ok = ex.trend_nonincreasing(curve, rate)
    r.verdicts.append(ex.Verdict("scaled-trend", "pass" if ok else "fail", float(ok), 1.0, 0.0,
                                 f"t^{rate:g}·norm nonincreasing on the last 4 points"))


def _run_thm43(r: _Run) -> None:
    n = r.cfg.n
    datum = r.datum()
    curve = r.add_curve(ex.run_solution_norm(n, datum, r.ladder, "low", r.quad, r.jobs))
    if n == 1:
        r.slope("squared-norm rate", curve, 1.0, ex.UPPER_TOL, True, square=True)
    elif n == 2:
        r.log_law("squared-norm log law", curve)
    else:
        r.slope("rate", curve, -n / 8 + 0.25, ex.TWO_SIDED_TOL, True)
    r.lower("lower bound", curve, ex.thm43_lower(datum))


def _run_residual(r: _Run, spec: ProfileSpec, region: str, expected: float, tol: float,
                  two_sided: bool, bound: ex.LowerBound | None) -> None:
    datum = r.datum()
    curve = r.add_curve(ex.run_profile_residual(r.cfg.n, datum, spec, region, r.ladder,
                                                r.quad, r.jobs))
    if bound is not None and bound.coefficient == 0:
        # vanishing moments void the optimality claim; only the upper rate applies
        r.slope("rate", curve, expected, ex.UPPER_TOL, False)
    else:
        r.slope("rate", curve, expected, tol, two_sided)
    if bound is not None:
        r.lower("lower bound", curve, bound)


def _run_lemma7(r: _Run) -> None:
    n = r.cfg.n
    curve = r.add_curve(ex.run_lemma7(n, r.ladder, r.quad, r.jobs))
    c, law = ex.lemma7_lower_constant(n)
    if n == 1:
        r.slope("growth", curve, 1.0, ex.UPPER_TOL, True)
        bound = ex.LowerBound(c, 1.0)
    elif n == 2:
        r.log_law("log growth", curve, square=False)
        bound = ex.LowerBound(c, law="log")
    else:
        r.slope("rate", curve, -n / 4 + 0.5, ex.TWO_SIDED_TOL, True)
        bound = ex.LowerBound(c, -n / 4 + 0.5)
    r.lower("lower bound", curve, bound)


def _fmt(x) -> str:
    return f"{float(x):g}"


def _run_sweep_l(r: _Run) -> None:
    cfg = r.cfg
    eps = cfg.datum.eps
    table = ex.threshold_sweep(cfg.n, cfg.l_values, r.ladder, eps, r.quad, r.jobs)
    for row, (sol, res) in zip(table.rows, zip(table.curves[::2], table.curves[1::2])):
        tag = f"l={_fmt(row.parameter)}"
        r.add_curve(sol, f"{tag}:solution")
        r.add_curve(res, f"{tag}:residual")
        tol = ex.TWO_SIDED_TOL if row.regime == "diffusion-wave" else ex.UPPER_TOL
        r.verdicts.append(ex.Verdict(
            f"{tag} solution norm ({row.regime})",
            "pass" if abs(row.slope - row.expected) <= tol else "fail",
            row.slope, row.expected, tol, "two-sided slope"))
        r.verdicts.append(ex.Verdict(
            f"{tag} case ({row.case}) residual",
            "pass" if row.residual_slope <= row.residual_expected + ex.UPPER_TOL else "fail",
            row.residual_slope, row.residual_expected, ex.UPPER_TOL, "upper slope"))
    lstar = float(table.threshold)
    straddles = min(cfg.l_values) < lstar < max(cfg.l_values)
    if straddles:
        flagged = any(a < lstar < b or b < lstar < a or lstar in (a, b)
                      for a, b in table.regime_change)
        r.verdicts.append(ex.Verdict(
            "regime change at l*", "pass" if flagged else "fail", lstar, lstar, 0.0,
            "flagged between " + ", ".join(f"{_fmt(a)}->{_fmt(b)}" for a, b in table.regime_change)))


def _sweep_k_datum(cfg: ExperimentConfig) -> InitialDatum:
    if cfg.datum.kind == "default":
        return ex.flattened_threshold_datum(cfg.n, cfg.l or 0.0, cfg.datum.eps)
    return cfg.build_datum()


def _run_sweep_k(r: _Run) -> None:
    cfg = r.cfg
    datum = _sweep_k_datum(cfg)
    table = ex.k_sweep(cfg.n, cfg.k_values, r.ladder, cfg.l or 0.0, cfg.datum.eps, r.quad,
                       r.jobs, datum=datum)
    for row, curve in zip(table.rows, table.curves):
        tag = f"k={int(row.parameter)}"
        r.add_curve(curve, tag)
        tol = ex.TWO_SIDED_TOL if row.regime == "diffusion-wave" else ex.UPPER_TOL
        r.verdicts.append(ex.Verdict(
            f"{tag} ({row.regime})", "pass" if abs(row.slope - row.expected) <= tol else "fail",
            row.slope, row.expected, tol, "two-sided slope"))
    diffusive = [row for row in table.rows if row.regime == "diffusion-wave"]
    if diffusive and any(row.regime != "diffusion-wave" for row in table.rows):
        r.verdicts.append(ex.Verdict("saturation at k*", "pass", float(table.threshold),
                                     float(table.threshold), 0.0,
                                     f"first diffusive order k = {int(diffusive[0].parameter)}"))


def _run_kernel_check(r: _Run) -> None:
    r.verdicts.extend(ex.kernel_checks())


def execute(cfg: ExperimentConfig, jobs: int = 1) -> RunRecord:
    """Run the harness mapped to ``cfg.id`` (no cache involved)."""
    start = time.perf_counter()
    r = _Run(cfg, jobs)
    n = cfg.n
    eid = cfg.id
    if eid == "thm41":
        _run_thm41_42(r, 0)
    elif eid == "thm42":
        _run_thm41_42(r, 1)
    elif eid == "thm43":
        _run_thm43(r)
    elif eid == "thm44":
        datum = r.datum()
        _run_residual(r, ex.A10, "low", -n / 8, ex.TWO_SIDED_TOL, True, ex.thm44_lower(datum))
    elif eid == "thm45":
        datum = r.datum()
        _run_residual(r, ProfileSpec(low=((1, 1), (0, 0))), "low", -n / 8 - 0.25,
                      ex.TWO_SIDED_TOL, True, ex.thm45_lower(datum, r.quad))
    elif eid == "thm46":
        l = cfg.l or 0.0
        _run_residual(r, ProfileSpec(high=cfg.k), "high", -(l + 3 * cfg.k + 4) / 2,
                      ex.UPPER_TOL, False, None)
    elif eid == "thm47":
        entry = ex.classify_case(n, cfg.l)
        r.verdicts.append(ex.Verdict(f"case ({entry.case})", "pass", float(entry.exponent),
                                     float(entry.exponent), 0.0,
                                     f"subtract {entry.subtracts}; {entry.rule}"))
        _run_residual(r, entry.profiles, "full", float(entry.exponent), ex.UPPER_TOL, False, None)
    elif eid == "thm61":
        _run_residual(r, ProfileSpec(high=cfg.k), "full", -n / 8 + 0.25, ex.TWO_SIDED_TOL, True,
                      ex.thm43_lower(r.datum()))
    elif eid == "thm62":
        _run_residual(r, ProfileSpec(low=((1, 0),), high=cfg.k), "full", -n / 8,
                      ex.TWO_SIDED_TOL, True, ex.thm44_lower(r.datum()))
    elif eid == "thm63":
        _run_residual(r, ProfileSpec(low=((1, 1), (0, 0)), high=cfg.k), "full", -n / 8 - 0.25,
                      ex.TWO_SIDED_TOL, True, ex.thm45_lower(r.datum(), r.quad))
    elif eid == "lemma7":
        _run_lemma7(r)
    elif eid == "sweep-l":
        _run_sweep_l(r)
    elif eid == "sweep-k":
        _run_sweep_k(r)
    elif eid == "kernel-check":
        _run_kernel_check(r)
    else:  # pragma: no cover - config validation rejects unknown ids
        raise ConfigError("id", f"no harness for {eid!r}")
    return RunRecord(cfg.digest(), cfg.canonical(), r.curves, r.fits, r.verdicts,
                     time.perf_counter() - start)


# -- serialisation and cache ----------------------------------------------------------

def _num(x):
    x = float(x)
    return None if math.isnan(x) else x


def _payload(record: RunRecord) -> dict:
    return {
        "curves": [{"experiment_id": c.experiment_id, "region": c.region,
                    "datum_digest": c.datum_digest, "t": list(c.t),
                    "values": [float(v) for v in c.values]} for c in record.curves],
        "fits": record.fits,
        "verdicts": [{"name": v.name, "status": v.status, "measured": _num(v.measured),
                      "expected": _num(v.expected), "tolerance": _num(v.tolerance),
                      "detail": v.detail} for v in record.verdicts],
    }


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _config_digest(canonical: dict) -> str:
    blob = json.dumps(canonical, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def record_to_json(record: RunRecord) -> str:
    payload = _payload(record)
    doc = {"digest": record.digest, "config": record.config, "payload": payload,
           "checksum": _checksum(payload), "wall_clock": record.wall_clock}
    return json.dumps(doc, sort_keys=True, indent=1)


def record_from_json(text: str, expected_digest: str) -> RunRecord:
    try:
        doc = json.loads(text)
        payload = doc["payload"]
        digest = doc["digest"]
        config = doc["config"]
        checksum = doc["checksum"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CacheCorruptionError(f"unreadable cache record for {expected_digest}: {exc}") from exc
    if digest != expected_digest or _config_digest(config) != expected_digest:
        raise CacheCorruptionError(f"cache record filed under {expected_digest} has digest {digest}")
    if _checksum(payload) != checksum:
        raise CacheCorruptionError(f"cache record {expected_digest} fails its checksum")
    curves = [ex.DecayCurve(tuple(c["t"]), tuple(c["values"]), c["experiment_id"], c["region"],
                            c["datum_digest"]) for c in payload["curves"]]
    verdicts = [ex.Verdict(v["name"], v["status"],
                           math.nan if v["measured"] is None else v["measured"],
                           math.nan if v["expected"] is None else v["expected"],
                           math.nan if v["tolerance"] is None else v["tolerance"], v["detail"])
                for v in payload["verdicts"]]
    return RunRecord(digest, config, curves, payload["fits"], verdicts,
                     doc.get("wall_clock", 0.0), from_cache=True)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_root(out: str | Path) -> Path:
    env = os.environ.get("SDLAB_CACHE_DIR")
    return Path(env) if env else Path(out)


def run(cfg: ExperimentConfig, jobs: int = 1, use_cache: bool = True,
        out: str | Path | None = None) -> RunRecord:
    """Run with caching keyed by the config digest."""
    digest = cfg.digest()
    path = cache_root(out if out is not None else cfg.out) / digest / "record.json"
    if use_cache and path.exists():
        return record_from_json(path.read_text(), digest)
    record = execute(cfg, jobs)
    if use_cache:
        _atomic_write(path, record_to_json(record))
    return record


# -- emitters ----------------------------------------------------------------------------------

def to_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for c in record.curves:
        for t, v in zip(c.t, c.values):
            buf.write(f"{float(t)!r},{float(v)!r},{c.region},{c.experiment_id}\n")
    return buf.getvalue()


def to_report(record: RunRecord) -> str:
    lines = [f"experiment {record.config['id']}  n = {record.config['n']}  digest {record.digest}"]
    for f in record.fits:
        sq = " (squared)" if f["squared"] else ""
        lines.append(f"fit {f['curve']}{sq}: {f['model']} slope {f['slope']:.4f}, "
                     f"max rel residual {f['max_rel_residual']:.2e}, R^2 {f['r_squared']:.6f}")
    for v in record.verdicts:
        lines.append(f"{v.status.upper():10s} {v.name}: measured {v.measured:.6g}, "
                     f"expected {v.expected:.6g}, tolerance {v.tolerance:g} ({v.detail})")
    lines.append("VERDICT " + ("PASS" if record.passed else "FAIL"))
    return "\n".join(lines) + "\n"


def emit(record: RunRecord, out: str | Path, fmt: str = "both") -> list[Path]:
    folder = Path(out) / record.digest
    written = []
    if fmt in ("csv", "both"):
        p = folder / "curves.csv"
        _atomic_write(p, to_csv(record))
        written.append(p)
    if fmt in ("report", "both"):
        p = folder / "report.txt"
        _atomic_write(p, to_report(record))
        written.append(p)
    return written


# -- entry point ------------------------------------------------------------------------------------

def _cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.out
    try:
        record = run(cfg, jobs=args.jobs, use_cache=not args.no_cache, out=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ex.InconsistentSpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CacheCorruptionError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return EXIT_CACHE
    paths = emit(record, out)
    sys.stdout.write(to_report(record))
    source = "cache" if record.from_cache else f"{record.wall_clock:.1f} s"
    print(f"wrote {', '.join(str(p) for p in paths)} ({source})")
    return EXIT_PASS if record.passed else EXIT_FAIL


def _cmd_list(args) -> int:
    width = max(map(len, EXPERIMENTS))
    for eid, text in EXPERIMENTS.items():
        print(f"{eid:<{width}}  {text}")
    return 0


def _cmd_constants(args) -> int:
    from .quadrature import thm45_constants

    if args.n < 1:
        print("config error: n must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    c1, c2, c3 = thm45_constants(args.n)
    print(f"C1 = {c1!r}\nC2 = {c2!r}\nC3 = {c3!r}")
    return 0


def _cmd_kernels(args) -> int:
    from .kernels import char_roots, kernel_value

    if args.t < 0 or args.r < 0:
        print("config error: t and r must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    roots = char_roots(args.r)
    kv = kernel_value(args.t, args.r)
    print(f"lambda1 = {roots.lambda1}\nlambda2 = {roots.lambda2}\nE0 = {kv.e0!r}\nE1 = {kv.e1!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdlab", description=__doc__)
    p.add_argument("--list", action="store_true", help="list experiment ids and exit")
    sub = p.add_subparsers(dest="command")
    pr = sub.add_parser("run", help="run an experiment config")
    pr.add_argument("config")
    pr.add_argument("--out", default=None, help="output directory (overrides the config)")
    pr.add_argument("--jobs", type=int, default=1, help="ladder points evaluated concurrently")
    pr.add_argument("--no-cache", action="store_true", help="recompute and skip the cache")
    pr.set_defaults(func=_cmd_run)
    sub.add_parser("list", help="list experiment ids").set_defaults(func=_cmd_list)
    pc = sub.add_parser("constants", help="print the second-order lower-bound constants")
    pc.add_argument("--n", type=int, required=True)
    pc.set_defaults(func=_cmd_constants)
    pk = sub.add_parser("kernels", help="print roots and kernels at (t, r)")
    pk.add_argument("--t", type=float, required=True)
    pk.add_argument("--r", type=float, required=True)
    pk.set_defaults(func=_cmd_kernels)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        return _cmd_list(args)
    if not getattr(args, "func", None):
        parser.print_help()
        return EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

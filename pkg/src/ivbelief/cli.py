"""Command-line interface: ``estimate``, ``infer``, ``surface`` and ``verify``.

Analyses are described by a JSON config; ``--draws``, ``--seed``,
``--coverage`` and ``--out`` override the corresponding config fields, which
in turn override the defaults.  The worker-thread count is read from the
``IVBELIEF_THREADS`` environment variable.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical or
oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import checks
from .binary import alpha_bounds, binary_kappa_floor
from .errors import (
    DataError,
    EmptyIdentifiedSet,
    InconsistentRestrictionError,
    InsufficientSampleError,
    IVBeliefError,
)
from .identified_set import (
    KAPPA_EPS,
    BINARY_EQUALITIES,
    Restrictions,
    _f,
    correlations,
    g_shift,
    kappa_lower_bound,
    kappa_window,
)
from .inference import infer_parameter, infer_set, set_bounds_for_draws
from .manifold import sample_structural
from .posterior import CovDraw, draw_sigma, posterior_mean
from .reduced_form import fit_reduced_form, kappa_from_lambda, load_csv

log = logging.getLogger("ivbelief")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
THREADS_ENV = "IVBELIEF_THREADS"


class ConfigError(IVBeliefError):
    """The analysis configuration is malformed."""


def _pair(value, name):
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name} must be a two-element list")
    return (None if value[0] is None else float(value[0]),
            None if value[1] is None else float(value[1]))


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything needed to reproduce an analysis.

    ``kappa_tilde`` and ``lambda_ratio`` are mutually exclusive ways to state
    the measurement-error restriction; a ``None`` lower end of
    ``kappa_tilde`` means "no restriction beyond the data".
    """

    data_path: str
    y: str
    t: str
    z: str
    x: tuple = ()
    treatment_kind: str = "continuous"
    kappa_tilde: tuple | None = None
    lambda_ratio: tuple | None = None
    rho: tuple = (-1.0, 1.0)
    binary_equality: str = "none"
    draws: int = 5000
    seed: int | None = None
    coverage: float = 0.9
    grid: int = 101
    output_dir: str = "ivbelief_out"

    def __post_init__(self):
        if (self.kappa_tilde is None) == (self.lambda_ratio is None):
            raise ConfigError("supply exactly one of kappa_tilde and lambda")
        if self.treatment_kind not in ("continuous", "binary"):
            raise ConfigError("treatment_kind must be 'continuous' or 'binary'")
        if self.binary_equality not in BINARY_EQUALITIES:
            raise ConfigError(f"binary_equality must be one of {BINARY_EQUALITIES}")
        if self.draws < 100:
            raise ConfigError("draws must be at least 100")
        if not (0.5 < self.coverage < 1.0):
            raise ConfigError("coverage must lie in (0.5, 1)")
        if self.grid < 2:
            raise ConfigError("grid must be at least 2")
        for name, pair, lo, hi in (("kappa_tilde", self.kappa_tilde, 0.0, 1.0),
                                   ("lambda", self.lambda_ratio, 0.0, 1.0),
                                   ("rho", self.rho, -1.0, 1.0)):
            if pair is None:
                continue
            a = lo if pair[0] is None else pair[0]
            b = hi if pair[1] is None else pair[1]
            if not (lo <= a <= b <= hi):
                raise ConfigError(f"{name} must be an ordered interval within [{lo:g}, {hi:g}]")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path | None = None) -> "AnalysisConfig":
        try:
            data = d["data"]
            restr = d.get("restrictions", {})
            inf = d.get("inference", {})
            path = str(data["path"])
            out_dir = str(d.get("output_dir", "ivbelief_out"))
            if base_dir is not None:
                # relative paths are taken relative to the config file
                if not os.path.isabs(path):
                    path = str(Path(base_dir) / path)
                if not os.path.isabs(out_dir):
                    out_dir = str(Path(base_dir) / out_dir)
            return cls(
                data_path=path,
                y=str(data["y"]),
                t=str(data["t"]),
                z=str(data["z"]),
                x=tuple(str(c) for c in data.get("x", ())),
                treatment_kind=d.get("treatment_kind", "continuous"),
                kappa_tilde=_pair(restr.get("kappa_tilde"), "kappa_tilde"),
                lambda_ratio=_pair(restr.get("lambda"), "lambda"),
                rho=_pair(restr.get("rho", [-1.0, 1.0]), "rho"),
                binary_equality=restr.get("binary_equality", "none"),
                draws=int(inf.get("draws", 5000)),
                seed=None if inf.get("seed") is None else int(inf["seed"]),
                coverage=float(inf.get("coverage", 0.9)),
                grid=int(inf.get("grid", 101)),
                output_dir=out_dir,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from exc

    def to_dict(self) -> dict:
        def lst(p):
            return None if p is None else list(p)

        return {
            "data": {"path": self.data_path, "y": self.y, "t": self.t, "z": self.z, "x": list(self.x)},
            "treatment_kind": self.treatment_kind,
            "restrictions": {
                "kappa_tilde": lst(self.kappa_tilde),
                "lambda": lst(self.lambda_ratio),
                "rho": lst(self.rho),
                "binary_equality": self.binary_equality,
            },
            "inference": {"draws": self.draws, "seed": self.seed, "coverage": self.coverage,
                          "grid": self.grid},
            "output_dir": self.output_dir,
        }


def load_config(path) -> AnalysisConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return AnalysisConfig.from_dict(raw, Path(path).parent)


def build_restrictions(cfg: AnalysisConfig, fit) -> Restrictions:
    """Translate config restrictions into a :class:`Restrictions` rectangle."""
    if cfg.kappa_tilde is not None:
        lo, hi = cfg.kappa_tilde
    else:
        lam_lo, lam_hi = cfg.lambda_ratio
        lo = None if lam_lo is None else kappa_from_lambda(lam_lo, fit.r2_t_on_x)
        hi = None if lam_hi is None else kappa_from_lambda(lam_hi, fit.r2_t_on_x)
    lo = KAPPA_EPS if lo is None or lo <= 0.0 else lo
    hi = 1.0 if hi is None else hi
    c, d = cfg.rho
    c = -1.0 if c is None else c
    d = 1.0 if d is None else d
    return Restrictions(lo, hi, c, d, cfg.binary_equality)


def threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# output helpers


def fmt17(x) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _Float(x)
    return obj


class _Float(float):
    def __repr__(self):
        return fmt17(self)


def dump_json(obj, path):
    text = _dumps(_jsonable(obj))
    Path(path).write_text(text + "\n", encoding="utf-8")


def _dumps(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_dumps(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dumps(v, indent + 1) for v in obj) + "]"
        items = [f"{pad}  {_dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, _Float):
        return fmt17(obj)
    return json.dumps(obj)


def fmt4(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".4g")
    if isinstance(x, (tuple, list)):
        return "[" + ", ".join(fmt4(v) for v in x) + "]"
    return str(x)


def table(rows) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {fmt4(v)}" for k, v in rows) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt17(v) if isinstance(v, (float, np.floating)) else v for v in r])


# ---------------------------------------------------------------------------
# commands


def _fit(cfg):
    data = load_csv(cfg.data_path, cfg.y, cfg.t, cfg.z, cfg.x, cfg.treatment_kind)
    return data, fit_reduced_form(data)


def cmd_estimate(cfg: AnalysisConfig) -> dict:
    """Reduced-form summary: slopes, ``L`` and (binary) mis-classification bounds."""
    data, fit = _fit(cfg)
    big_l = kappa_lower_bound(fit.r12, fit.r13, fit.r23)
    out = {
        "n": fit.n,
        "k": fit.k,
        "dropped_rows": data.dropped_rows,
        "treatment_kind": fit.treatment_kind,
        "sigma_hat": fit.sigma_hat,
        "r12": fit.r12,
        "r13": fit.r13,
        "r23": fit.r23,
        "r2_t_on_x": fit.r2_t_on_x,
        "ols_slope": fit.ols_slope,
        "iv_slope": fit.iv_slope,
        "kappa_lower_bound": big_l,
    }
    rows = [(k, out[k]) for k in ("n", "k", "dropped_rows", "r12", "r13", "r23", "r2_t_on_x",
                                  "ols_slope", "iv_slope", "kappa_lower_bound")]
    if fit.treatment_kind == "binary":
        out["p_hat"] = fit.p_hat
        rows.append(("p_hat", fit.p_hat))
        try:
            a0, a1, psi_min = alpha_bounds(fit.sigma_hat[1, 1], big_l, fit.p_hat)
            out.update(alpha0_max=a0, alpha1_max=a1, psi_min=psi_min)
            rows += [("alpha0_max", a0), ("alpha1_max", a1), ("psi_min", psi_min)]
        except IVBeliefError as exc:
            out["alpha_bounds_error"] = str(exc)
    od = Path(cfg.output_dir)
    od.mkdir(parents=True, exist_ok=True)
    dump_json(out, od / "estimate.json")
    (od / "estimate.txt").write_text(table(rows), encoding="utf-8")
    return out


def _require_seed(cfg):
    if cfg.seed is None:
        raise ConfigError("a seed is required (config inference.seed or --seed)")


def cmd_infer(cfg: AnalysisConfig) -> dict:
    """Posterior draws, set-level and parameter-level inference."""
    _require_seed(cfg)
    _, fit = _fit(cfg)
    restr = build_restrictions(cfg, fit)
    workers = threads()
    draws = draw_sigma(fit, cfg.seed, cfg.draws, workers)
    anchor = CovDraw.from_sigma(posterior_mean(fit), -1, fit.p_hat)
    bounds = set_bounds_for_draws(draws, restr, fit.treatment_kind, workers)
    s = infer_set(draws, restr, fit.treatment_kind, cfg.coverage, anchor, bounds)
    params = sample_structural(draws, restr, fit.treatment_kind, cfg.seed, workers)
    try:
        p = infer_parameter(params, cfg.coverage)
        p_out = asdict(p)
        insufficient = False
    except InsufficientSampleError:
        p, p_out, insufficient = None, None, True
        log.warning("insufficient posterior sample: %d nonempty draws", s.nonempty_count)
    set_out = {f.name: getattr(s, f.name) for f in fields(s) if f.name != "anchor_bounds"}
    set_out["anchor_bounds"] = asdict(s.anchor_bounds)
    out = {
        "restrictions": asdict(restr),
        "draw_redraws": draws.redraws,
        "set_inference": set_out,
        "parameter_inference": p_out,
        "insufficient_posterior_sample": insufficient,
    }
    od = Path(cfg.output_dir)
    od.mkdir(parents=True, exist_ok=True)
    dump_json(out, od / "infer.json")
    rows = [
        ("draws", s.draw_count),
        ("P(empty)", s.p_empty),
        ("P(valid)", s.p_valid),
        ("P(valid | nonempty)", s.p_valid_nonempty),
        (f"set CI rho_uzeta ({s.coverage:g})", s.ci_rho_uzeta),
        (f"set CI beta ({s.coverage:g})", s.ci_beta),
        ("anchor fallback", s.anchor_fallback),
    ]
    if p is not None:
        rows += [
            ("median rho_uzeta", p.median_rho_uzeta),
            ("HPD rho_uzeta", p.hpd_rho_uzeta),
            ("median beta", p.median_beta),
            ("HPD beta", p.hpd_beta),
            ("kept draws", p.kept_draws),
        ]
    else:
        rows.append(("parameter inference", "insufficient posterior sample"))
    (od / "infer.txt").write_text(table(rows), encoding="utf-8")
    header = ["source_draw", "kappa_tilde", "rho_uxistar", "rho_uzeta", "rho_uv", "sigma_u",
              "psi", "beta", "beta_tilde"]
    write_csv(od / "param_draws.csv", header,
              ([getattr(d, h) for h in header] for d in params if d is not None))
    bheader = ["index", "empty", "contains_valid", "rho_uzeta_lo", "rho_uzeta_hi", "beta_lo", "beta_hi"]
    write_csv(od / "set_bounds.csv", bheader,
              ([d.index, int(b.empty), int(b.contains_valid), b.rho_uzeta_lo, b.rho_uzeta_hi,
                b.beta_lo, b.beta_hi] for d, b in zip(draws, bounds)))
    return out


def surface_rows(sigma, restrictions, resolution, kappa_floor=None):
    """Grid of ``(kappa_tilde, rho, rho_uzeta, beta_tilde)`` over the restricted set."""
    r = correlations(sigma)
    lo, hi = kappa_window(kappa_lower_bound(*r), restrictions, kappa_floor)
    ks = np.linspace(lo, hi, resolution)
    rhos = np.linspace(restrictions.rho_lo, restrictions.rho_hi, resolution)
    rhos = rhos[np.abs(rhos) < 1.0]
    kk, rr = np.meshgrid(ks, rhos, indexing="ij")
    f = _f(*r, kk, rr)
    beta = sigma[0, 2] / sigma[1, 2] - g_shift(sigma, kk, rr)
    return np.column_stack([kk.ravel(), rr.ravel(), f.ravel(), beta.ravel()])


def cmd_surface(cfg: AnalysisConfig) -> int:
    """Identified-set surface at the posterior mean, for 3-D plotting."""
    _, fit = _fit(cfg)
    restr = build_restrictions(cfg, fit)
    sigma = posterior_mean(fit)
    floor = None
    if fit.treatment_kind == "binary":
        floor = binary_kappa_floor(sigma[1, 1], fit.p_hat, restr.binary_equality)
    header = ["kappa_tilde", "rho_uxistar", "rho_uzeta", "beta"]
    od = Path(cfg.output_dir)
    od.mkdir(parents=True, exist_ok=True)
    try:
        rows = surface_rows(sigma, restr, cfg.grid, floor)
    except EmptyIdentifiedSet:
        log.warning("identified set is empty at the posterior mean; writing header only")
        rows = np.empty((0, 4))
    write_csv(od / "surface.csv", header, rows.tolist())
    return rows.shape[0]


def cmd_verify(seed=0, full=False, l_func=None, stream=None) -> bool:
    """Run the oracle cross-checks and print one line per check."""
    stream = stream or sys.stdout
    results = checks.run_checks(seed, quick=not full, l_func=l_func)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print(f"{'ALL PASS' if ok else 'FAILURES'} seed={seed}", file=stream)
    return ok


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ivbelief", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("estimate", "reduced-form summary"),
                           ("infer", "posterior inference"),
                           ("surface", "identified-set grid at the posterior mean")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config")
        sp.add_argument("--draws", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--coverage", type=float)
        sp.add_argument("--out")
    sv = sub.add_parser("verify", help="run oracle cross-checks")
    sv.add_argument("--seed", type=int, default=0)
    sv.add_argument("--full", action="store_true", help="use the full acceptance sample sizes")
    return p


def apply_overrides(cfg: AnalysisConfig, args) -> AnalysisConfig:
    over = {}
    if args.draws is not None:
        over["draws"] = args.draws
    if args.seed is not None:
        over["seed"] = args.seed
    if args.coverage is not None:
        over["coverage"] = args.coverage
    if args.out is not None:
        over["output_dir"] = args.out
    return replace(cfg, **over) if over else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "verify":
            return EXIT_OK if cmd_verify(args.seed, args.full) else EXIT_NUMERIC
        cfg = apply_overrides(load_config(args.config), args)
        if args.command == "estimate":
            cmd_estimate(cfg)
            print((Path(cfg.output_dir) / "estimate.txt").read_text(), end="")
        elif args.command == "infer":
            cmd_infer(cfg)
            print((Path(cfg.output_dir) / "infer.txt").read_text(), end="")
        else:
            n = cmd_surface(cfg)
            print(f"wrote {n} rows to {Path(cfg.output_dir) / 'surface.csv'}")
    except (ConfigError, InconsistentRestrictionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IVBeliefError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK

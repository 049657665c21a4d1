"""Table-reproduction checks against the public replication files.

The directory named by ``IVBELIEF_REPLICATION_DIR`` must contain
``replication.json`` mapping each study (``colonial``, ``weber``, ``afghan``)
to an analysis config in the CLI format; data paths are relative to that
directory.  Studies missing from the manifest are skipped.
"""

import json

import numpy as np

from ivbelief.binary import alpha_bounds
from ivbelief.cli import AnalysisConfig
from ivbelief.identified_set import KAPPA_EPS, Restrictions, kappa_lower_bound
from ivbelief.inference import infer_set
from ivbelief.posterior import draw_sigma, posterior_mean
from ivbelief.reduced_form import fit_reduced_form, load_csv

DRAWS = 5000
SEED = 2024


def _fit(cfg):
    data = load_csv(cfg.data_path, cfg.y, cfg.t, cfg.z, cfg.x, cfg.treatment_kind)
    return fit_reduced_form(data)


def _colonial(cfg):
    fit = _fit(cfg)
    big_l = kappa_lower_bound(fit.r12, fit.r13, fit.r23)
    out = [("colonial L", abs(big_l - 0.54) <= 0.02, f"L={big_l:.3f} (0.54+-0.02)")]
    draws = draw_sigma(fit, SEED, DRAWS)
    s = infer_set(draws, Restrictions(KAPPA_EPS, 0.6), "continuous", 0.9, posterior_mean(fit))
    out.append(("colonial P(empty)", abs(s.p_empty - 0.26) <= 0.03,
                f"P(empty)={s.p_empty:.3f} (0.26+-0.03)"))
    return out


def _weber(cfg):
    fit = _fit(cfg)
    big_l = kappa_lower_bound(fit.r12, fit.r13, fit.r23)
    out = [("weber L", 0.45 < big_l < 0.50, f"L={big_l:.3f} in (0.45, 0.50)")]
    draws = draw_sigma(fit, SEED, DRAWS)
    s = infer_set(draws, Restrictions(0.8, 1.0, -0.9, 0.0), "continuous", 0.9, posterior_mean(fit))
    out.append(("weber P(valid)", round(s.p_valid, 2) == 1.0, f"P(valid)={s.p_valid:.3f} (1.00)"))
    return out


def _afghan(cfg):
    fit = _fit(cfg)
    draws = draw_sigma(fit, SEED, DRAWS)
    psi_min = [alpha_bounds(d.sigma[1, 1], d.big_l, fit.p_hat)[2] for d in draws]
    m = float(np.mean(psi_min))
    return [("afghan psi_min", abs(m - (-0.30)) <= 0.03, f"mean psi_min={m:.3f} (-0.30+-0.03)")]


def run_replication_checks(root):
    manifest = json.loads((root / "replication.json").read_text())
    runners = {"colonial": _colonial, "weber": _weber, "afghan": _afghan}
    results = []
    for name, runner in runners.items():
        if name in manifest:
            results += runner(AnalysisConfig.from_dict(manifest[name], root))
    return results

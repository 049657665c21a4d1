"""
Command-line workflow
=====================

Write a small data set and a JSON configuration to a temporary directory,
then run the ``estimate``, ``infer`` and ``surface`` commands exactly as
``ivbelief <command> config.json`` would.
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from ivbelief import oracle
from ivbelief.cli import main

work = Path(tempfile.mkdtemp(prefix="ivbelief_demo_"))
y, t, z, x = oracle.simulate(oracle.synthetic_study_config(), 5000, np.random.default_rng(3), x_dim=1)
pd.DataFrame({"y": y, "t": t, "z": z, "age": x[:, 0]}).to_csv(work / "data.csv", index=False)

config = {
    "data": {"path": "data.csv", "y": "y", "t": "t", "z": "z", "x": ["age"]},
    "treatment_kind": "continuous",
    "restrictions": {"kappa_tilde": [0.7, 1.0], "rho": [0.0, 0.6]},
    "inference": {"draws": 500, "seed": 7, "coverage": 0.9, "grid": 21},
    "output_dir": "results",
}
(work / "config.json").write_text(json.dumps(config, indent=2))

for command in ("estimate", "infer", "surface"):
    print(f"$ ivbelief {command} config.json")
    code = main([command, str(work / "config.json")])
    print(f"(exit {code})\n")

print("outputs:", sorted(p.name for p in (work / "results").iterdir()))

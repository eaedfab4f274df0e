"""Command-line overrides for dataclass experiment configs."""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, fields
from pathlib import Path


def parse_config(cls, description: str):
    """Build ``cls`` from ``--field value`` flags; tuples take comma-separated values."""
    p = argparse.ArgumentParser(description=description)
    for f in fields(cls):
        default = f.default if not callable(f.default_factory) else f.default_factory()
        if isinstance(default, tuple):
            kind = type(default[0]) if default else str
            p.add_argument(f"--{f.name.replace('_', '-')}", default=default,
                           type=lambda s, kind=kind: tuple(kind(x) for x in s.split(",")))
        elif isinstance(default, bool):
            p.add_argument(f"--{f.name.replace('_', '-')}", default=default,
                           type=lambda s: s.lower() in ("1", "true", "yes"))
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", default=default, type=type(default))
    p.add_argument("--out", default=None, help="write results as JSON here")
    ns = vars(p.parse_args())
    out = ns.pop("out")
    return cls(**ns), out


def dump(config, results, out):
    payload = {"config": asdict(config), "results": results}
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, default=float))
        print(f"wrote {out}")

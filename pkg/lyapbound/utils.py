import json
import logging
import multiprocessing as mp
import os
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

import pandas as pd
from tqdm import tqdm

from ._base import LyapBoundError, _as_fraction, make_context
from ._bounds import check_options, lyapunov_enclosure
from .maps import builtin

logger = logging.getLogger(__name__)

WORKERS_ENV = "LYAPBOUND_WORKERS"
SWEEP_COLUMNS = ["c", "lower", "upper", "width", "status"]


def resolve_workers(requested=None):
    """Worker count: ``requested``, else ``$LYAPBOUND_WORKERS``, else min(4, cpus); capped at the cpu count."""
    if requested is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValueError(f"{WORKERS_ENV} should be an integer, got {env!r}")
        else:
            requested = min(4, mp.cpu_count())
    if requested < 1:
        raise ValueError(f"worker count should be >= 1, got {requested}")
    return min(mp.cpu_count(), requested)


def _pool_context():
    # fork is unsafe on macOS/Windows and once torch is loaded
    if platform.system().lower() in ["darwin", "windows"] or "torch" in sys.modules:
        return "spawn"
    return "fork"


def parameter_grid(start, stop, count):
    """``count`` equally spaced exact parameters from ``start`` to ``stop`` (inclusive)."""
    start, stop = _as_fraction(start, "from"), _as_fraction(stop, "to")
    if count < 1:
        raise ValueError(f"count should be >= 1, got {count}")
    if count == 1:
        return [start]
    return [start + (stop - start) * j / (count - 1) for j in range(count)]


def format_parameter(c):
    return f"{float(c):.15g}"


###############################################################################
# Sweeps


def _sweep_row(family, c, epsilon, m, digits, opts):
    row = {"c": format_parameter(c), "lower": "", "upper": "", "width": "", "status": "ok", "error": ""}
    ctx = make_context(digits)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = builtin(family, {"c": c})
        enclosure = lyapunov_enclosure(spec, epsilon, m, ctx, opts)
    except LyapBoundError as exc:
        row.update(status=f"failed:{exc.reason}", error=str(exc))
        return row
    row.update(
        lower=ctx.to_digits(enclosure.lower),
        upper=ctx.to_digits(enclosure.upper),
        width=ctx.to_digits(enclosure.width),
    )
    return row


def sweep(family, c_values, epsilon, m, ctx, opts=None, workers=1):
    """Enclosures for a one-parameter built-in family.

    Rows that fail keep their place with ``status = "failed:<reason>"`` and
    the message in ``error``; the sweep itself never raises for a row.

    Parameters
    ----------
    family : str
        ``lanford_family`` or ``bent_tent``.
    c_values : list
        Parameters, converted exactly.
    epsilon, m, ctx, opts
        As for :func:`lyapunov_enclosure`.
    workers : int, default=1
        Rows run on a process pool when larger than 1.

    Returns
    -------
    pandas.DataFrame
        Columns ``c, lower, upper, width, status, error`` with digit strings.
    """
    c_values = [_as_fraction(c, "c") for c in c_values]
    # Validate the admissible range up front.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for c in c_values:
            builtin(family, {"c": c})
    opts = dict(opts or {})
    check_options(opts, ctx)
    args = [(family, c, epsilon, m, ctx.digits, opts) for c in c_values]

    if workers == 1 or len(args) == 1:
        rows = [_sweep_row(*a) for a in tqdm(args, desc=f"Sweeping {family}")]
    else:
        logger.info(f"Sweeping {len(args)} parameters of {family} with {workers} workers")
        with mp.get_context(_pool_context()).Pool(workers) as pool:
            rows = list(tqdm(pool.imap(_star_sweep_row, args), total=len(args), desc=f"Sweeping {family}"))

    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS + ["error"])
    n_ok = int((table["status"] == "ok").sum())
    logger.info(f"Sweep finished: {n_ok}/{len(table)} rows succeeded")
    return table


def _star_sweep_row(args):
    return _sweep_row(*args)


###############################################################################
# Records and manifests


@dataclass
class RunManifest:
    """Everything needed to repeat a run; ``started``/``wall_time`` are informational."""

    command: str
    map: dict
    epsilon: str = None
    m: int = None
    digits: int = None
    opts: dict = field(default_factory=dict)
    seed: int = None
    extra: dict = field(default_factory=dict)
    version: str = ""
    started: str = ""
    wall_time: float = 0.0

    def __post_init__(self):
        if not self.version:
            from . import __version__

            self.version = __version__
        if not self.started:
            self.started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._t0 = time.perf_counter()

    def finish(self):
        self.wall_time = round(time.perf_counter() - self._t0, 3)
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


def json_options(opts):
    """Options with scalars rendered as strings."""
    return {k: (str(v) if hasattr(v, "_mpf_") or isinstance(v, Fraction) else v) for k, v in (opts or {}).items()}


def certificate_record(cert, ctx):
    return {
        "bound": ctx.to_digits(cert.bound),
        "dense_max": ctx.to_digits(cert.dense_max),
        "tail_pad": ctx.to_digits(cert.tail_pad),
        "tail_ratio": ctx.to_digits(cert.tail_ratio),
        "refine_degree": cert.refine_degree,
    }


def enclosure_record(enclosure, ctx, manifest, monte_carlo=None):
    """Serializable result of one enclosure; every real is a digit string."""
    record = {
        "manifest": manifest.to_dict(),
        "map": enclosure.map_name,
        "epsilon": ctx.to_digits(enclosure.epsilon),
        "m": enclosure.m,
        "digits": enclosure.digits,
        "alpha": ctx.to_digits(enclosure.alpha),
        "beta": ctx.to_digits(enclosure.beta),
        "lower": ctx.to_digits(enclosure.lower),
        "upper": ctx.to_digits(enclosure.upper),
        "width": ctx.to_digits(enclosure.width),
        "certificates": [certificate_record(c, ctx) for c in enclosure.certificates],
    }
    if monte_carlo is not None:
        record["monte_carlo"] = [
            {
                "max_ratio": ctx.to_digits(r.max_ratio),
                "gap_to_certificate": ctx.to_digits(r.gap_to_certificate),
                "n_points": r.n_points,
                "trials": r.trials,
                "seed": r.seed,
                "generator": r.generator,
            }
            for r in monte_carlo
        ]
    return record


def flatten_record(record, prefix=""):
    """Dotted-key flat dict (lists indexed by position) for CSV output."""
    flat = {}
    items = record.items() if isinstance(record, dict) else enumerate(record)
    for key, value in items:
        name = f"{prefix}{key}"
        if isinstance(value, (dict, list, tuple)):
            flat.update(flatten_record(value, name + "."))
        else:
            flat[name] = value
    return flat


def write_json(record, path):
    with open(path, "w") as fp:
        json.dump(record, fp, indent=2)
        fp.write("\n")


def write_record_csv(record, path):
    pd.DataFrame([flatten_record(record)], dtype=object).to_csv(path, index=False)


def write_table(table, path, fmt, manifest):
    """Sweep table as CSV (manifest on a leading ``#`` line) or JSON."""
    if fmt == "json":
        write_json({"manifest": manifest.to_dict(), "rows": table.to_dict(orient="records")}, path)
        return
    with open(path, "w") as fp:
        fp.write("# manifest " + json.dumps(manifest.to_dict(), sort_keys=True) + "\n")
        table[SWEEP_COLUMNS].to_csv(fp, index=False)


def read_manifest(path):
    """Manifest embedded in a JSON result file."""
    with open(path) as fp:
        data = json.load(fp)
    if "manifest" not in data:
        raise ValueError(f"{path} has no embedded manifest")
    return RunManifest.from_dict(data["manifest"])

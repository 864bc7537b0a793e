"""Count-table ingestion, experiment configuration, and report emission.

CSV schemas (exact headers):

  observational   x,a,b,count
  interventional  do_a,x,b,count

Counts are nonnegative integers, duplicate rows are summed, and every setting
(or intervention row) must have at least one shot.  report.json follows the
fixed schema of CertReport.to_json_dict; curve CSVs carry the columns
abscissa,value,stderr_lo,stderr_hi with empty stderr fields when a curve is
exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from . import certify, linalg, proclib, process
from .exceptions import ParseError, ValidationError

OBS_HEADER = ["x", "a", "b", "count"]
DO_HEADER = ["do_a", "x", "b", "count"]


@dataclass(frozen=True)
class CountTable:
    """Aggregated event counts of one experiment.

    kind is "observational" (rows keyed (x, a, b)) or "interventional"
    (rows keyed (do_a, x, b)).
    """

    kind: str
    rows: Mapping[tuple, int]
    settings: tuple[str, ...]

    def total_shots(self) -> dict:
        totals: dict = {}
        for key, count in self.rows.items():
            group = key[0] if self.kind == "observational" else (key[0], key[1])
            totals[group] = totals.get(group, 0) + count
        return totals


def ingest_counts(path: str | Path) -> CountTable:
    """Parse and validate a count CSV; duplicate rows are summed."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header == OBS_HEADER:
            kind = "observational"
        elif header == DO_HEADER:
            kind = "interventional"
        else:
            raise ParseError(f"{path}: unrecognized header {header}")
        rows: dict[tuple, int] = {}
        settings: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                if kind == "observational":
                    x = row[0].strip()
                    a, b, count = int(row[1]), int(row[2]), int(row[3])
                    key: tuple = (x, a, b)
                else:
                    a, b, count = int(row[0]), int(row[2]), int(row[3])
                    x = row[1].strip()
                    key = (a, x, b)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if a not in (0, 1) or b not in (0, 1):
                raise ParseError(f"{path}:{lineno}: outcomes must be 0 or 1")
            if count < 0:
                raise ParseError(f"{path}:{lineno}: negative count {count}")
            if x not in settings:
                settings.append(x)
            rows[key] = rows.get(key, 0) + count
    table = CountTable(kind=kind, rows=rows, settings=tuple(settings))
    for group, total in table.total_shots().items():
        if total < 1:
            raise ValidationError(f"{path}: group {group!r} has zero shots")
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return table


def counts_to_behavior(table: CountTable) -> process.Behavior | process.DoTable:
    """Maximum-likelihood frequencies from counts; zero cells stay zero (no
    smoothing, which would bias the minimum-based functionals)."""
    totals = table.total_shots()
    if table.kind == "observational":
        probs = np.zeros((len(table.settings), 2, 2))
        for (x, a, b), count in table.rows.items():
            probs[table.settings.index(x), a, b] = count / totals[x]
        return process.Behavior(
            settings=table.settings,
            probs=probs,
            shots={x: totals[x] for x in table.settings},
        )
    probs = np.zeros((2, len(table.settings), 2))
    for (a, x, b), count in table.rows.items():
        probs[a, table.settings.index(x), b] = count / totals[(a, x)]
    for a in (0, 1):
        for x in table.settings:
            if (a, x) not in totals:
                raise ValidationError(f"missing intervention row (a={a}, x={x!r})")
    return process.DoTable(
        probs=probs,
        do_settings=table.settings,
        shots={(a, x): totals[(a, x)] for a in (0, 1) for x in table.settings},
    )


def behavior_to_counts(
    behavior: process.Behavior,
    shots_per_setting: int,
    rng: np.random.Generator | None = None,
) -> CountTable:
    """Synthesize a count table from a behavior: multinomial sampling when a
    generator is given, exact rounding otherwise (exact requires the scaled
    probabilities to be integral)."""
    rows: dict[tuple, int] = {}
    for xi, x in enumerate(behavior.settings):
        p = np.asarray(behavior.probs[xi], dtype=float).reshape(-1)
        if rng is None:
            scaled = p * shots_per_setting
            counts = np.rint(scaled)
            if np.abs(counts - scaled).max() > 1e-9:
                raise ValidationError(
                    "exact count synthesis needs probabilities divisible by 1/shots"
                )
        else:
            counts = rng.multinomial(shots_per_setting, p / p.sum())
        for cell, count in enumerate(counts.astype(int)):
            rows[(x, cell // 2, cell % 2)] = count
    return CountTable(kind="observational", rows=rows, settings=behavior.settings)


# --- experiment configuration -----------------------------------------------

_NAMED_STATES = {"bell": linalg.bell_state}
_NAMED_REPREPARATIONS = {
    "plus_minus": lambda: (linalg.dm(linalg.KET_MINUS), linalg.dm(linalg.KET_PLUS)),
    "plus_minus_i": lambda: (
        linalg.dm(linalg.KET_PLUS_I),
        linalg.dm(linalg.KET_MINUS_I),
    ),
}
_NAMED_FINALS = {
    "xz_diagonal": proclib.memory_final_povm,
    "x": proclib.swap_final_povm,
    "z": lambda: linalg.observable_povm(linalg.SIGMA_Z),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulated run."""

    protocol: str = "memory_test"  # memory_test | partial_swap | custom
    alpha: float | None = None
    initial_state: str | np.ndarray = "bell"
    unitary: str | np.ndarray = "cnot_swap"
    settings: tuple[str, ...] = proclib.SETTING_LABELS
    repreparations: str | tuple[np.ndarray, np.ndarray] = "plus_minus"
    final_measurement: str | tuple[np.ndarray, np.ndarray] = "xz_diagonal"
    shots: int | None = None
    seed: int = 0
    resamples: int = certify.DEFAULT_RESAMPLES
    sigma_k: float = certify.DEFAULT_SIGMA_K
    noise: proclib.NoiseParams | None = None
    wait_ms: float = 0.0
    frozen_argmin: bool = False


def _as_matrix(obj, dim: int) -> np.ndarray:
    """Explicit matrix from nested [re, im] entry lists."""
    arr = np.asarray(obj, dtype=float)
    if arr.shape != (dim, dim, 2):
        raise ValidationError(
            f"explicit matrix must be {dim}x{dim} entries of [re, im] pairs"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an experiment configuration from a YAML document."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a mapping at top level")
    known = {
        "protocol", "alpha", "shots", "seed", "resamples", "sigma_k",
        "wait_ms", "frozen_argmin", "initial_state", "unitary", "settings",
        "repreparations", "final_measurement", "noise",
    }
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ParseError(f"{path}: unknown configuration keys {unknown}")
    kwargs: dict = {}
    for key in (
        "protocol", "alpha", "shots", "seed", "resamples",
        "sigma_k", "wait_ms", "frozen_argmin",
    ):
        if key in doc:
            kwargs[key] = doc[key]
    if isinstance(kwargs.get("shots"), str):
        if kwargs["shots"] != "exact":
            raise ParseError(f"{path}: shots must be an integer or 'exact'")
        kwargs["shots"] = None
    for key, dim in (("initial_state", 4), ("unitary", 4)):
        if key in doc:
            kwargs[key] = doc[key] if isinstance(doc[key], str) else _as_matrix(doc[key], dim)
    if "settings" in doc:
        kwargs["settings"] = tuple(str(x) for x in doc["settings"])
    for key in ("repreparations", "final_measurement"):
        if key in doc:
            val = doc[key]
            kwargs[key] = val if isinstance(val, str) else tuple(
                _as_matrix(m, 2) for m in val
            )
    if "noise" in doc and doc["noise"] is not None:
        nz = doc["noise"]
        kwargs["noise"] = proclib.NoiseParams(
            t2=float(nz["t2_ms"]),
            t1=float(nz.get("t1_ms", 1170.0)),
            echo_fidelity=float(nz["echo_fidelity"]),
            echo_interval=float(nz["echo_interval_ms"]),
            initial_gamma=float(nz["initial_gamma"]),
        )
        if "wait_ms" in nz:
            kwargs["wait_ms"] = float(nz["wait_ms"])
    return ExperimentConfig(**kwargs)


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """Shipped protocol presets."""
    if name == "memory_test":
        base = dict(
            protocol="memory_test",
            unitary="cnot_swap",
            repreparations="plus_minus",
            final_measurement="xz_diagonal",
        )
    elif name == "partial_swap":
        base = dict(
            protocol="partial_swap",
            alpha=overrides.pop("alpha", math.pi / 2),
            unitary="partial_swap",
            repreparations="plus_minus_i",
            final_measurement="x",
        )
    else:
        raise ValidationError(f"unknown preset {name!r}")
    base.update(overrides)
    return ExperimentConfig(**base)


def _resolve(cfg: ExperimentConfig):
    if isinstance(cfg.initial_state, str):
        if cfg.initial_state not in _NAMED_STATES:
            raise ValidationError(f"unknown initial state {cfg.initial_state!r}")
        rho = _NAMED_STATES[cfg.initial_state]()
    else:
        rho = np.asarray(cfg.initial_state, dtype=complex)

    if isinstance(cfg.unitary, str):
        if cfg.unitary == "cnot_swap":
            u = proclib.cnot_swap_unitary()
        elif cfg.unitary == "partial_swap":
            if cfg.alpha is None:
                raise ValidationError("partial_swap unitary needs an alpha")
            u = proclib.partial_swap(cfg.alpha)
        else:
            raise ValidationError(f"unknown unitary {cfg.unitary!r}")
    else:
        u = np.asarray(cfg.unitary, dtype=complex)

    if isinstance(cfg.repreparations, str):
        if cfg.repreparations not in _NAMED_REPREPARATIONS:
            raise ValidationError(f"unknown repreparations {cfg.repreparations!r}")
        reps = _NAMED_REPREPARATIONS[cfg.repreparations]()
    else:
        reps = tuple(np.asarray(r, dtype=complex) for r in cfg.repreparations)

    if isinstance(cfg.final_measurement, str):
        if cfg.final_measurement not in _NAMED_FINALS:
            raise ValidationError(f"unknown final measurement {cfg.final_measurement!r}")
        final = _NAMED_FINALS[cfg.final_measurement]()
    else:
        final = tuple(np.asarray(f, dtype=complex) for f in cfg.final_measurement)

    standard = proclib.standard_settings_povm()
    unknown = [x for x in cfg.settings if x not in standard]
    if unknown:
        raise ValidationError(f"unknown setting labels {unknown}")
    inst = process.MpInstrument(
        settings=tuple(cfg.settings),
        povm={x: standard[x] for x in cfg.settings},
        repreparations=reps,
    )
    return rho, u, inst, final


def run_experiment(
    cfg: ExperimentConfig,
) -> tuple[process.Behavior, process.DoTable, certify.CertReport]:
    """Simulate one configuration end to end and certify the result.

    Exact mode propagates the ideal probabilities; finite shots draw one
    multinomial sample per setting (and per intervention row) with per-row
    seeds derived from the configured seed, so runs are reproducible.
    A noise block attenuates all correlations by the dephasing-with-echo
    visibility at the configured waiting time, anchored to initial_gamma.
    """
    rho, u, inst, final = _resolve(cfg)
    op = process.build_process(rho, u)
    behavior = process.born_rule(op, inst, final)
    do_exact = process.do_probabilities(op, inst.repreparations, final)

    if cfg.noise is not None:
        # correlator attenuation toward the uniform table, anchored so the
        # zero-wait gamma of the ideal protocol equals initial_gamma
        vis = (2.0 - cfg.noise.initial_gamma) / math.sqrt(2.0)
        vis *= proclib._visibility_decay(cfg.noise, cfg.wait_ms, False)
        behavior = process.Behavior(
            settings=behavior.settings,
            probs=vis * (behavior.probs - 0.25) + 0.25,
        )
        do_exact = process.DoTable(
            probs=vis * (do_exact.probs - 0.5) + 0.5,
            do_settings=None,
        )

    if cfg.shots is None:
        do_table = do_exact
    else:
        if cfg.shots < 1:
            raise ValidationError("shots must be positive")
        probs = np.empty_like(np.asarray(behavior.probs))
        shots: dict[str, int] = {}
        for xi, x in enumerate(behavior.settings):
            rng = np.random.default_rng([cfg.seed, xi])
            p = np.asarray(behavior.probs[xi]).reshape(-1)
            probs[xi] = (rng.multinomial(cfg.shots, p / p.sum()) / cfg.shots).reshape(2, 2)
            shots[x] = cfg.shots
        behavior = process.Behavior(settings=behavior.settings, probs=probs, shots=shots)
        # the interventional run is repeated for every setting label even when
        # the underlying distribution is x-independent, mirroring the data
        # layout of a real crosstalk test
        dprobs = np.empty((2, len(behavior.settings), 2))
        dshots: dict[tuple[int, str], int] = {}
        for a in (0, 1):
            for xi, x in enumerate(behavior.settings):
                rng = np.random.default_rng([cfg.seed, 1000 + 2 * xi + a])
                p = np.asarray(do_exact.probs[a, 0])
                dprobs[a, xi] = rng.multinomial(cfg.shots, p / p.sum()) / cfg.shots
                dshots[(a, x)] = cfg.shots
        do_table = process.DoTable(
            probs=dprobs, do_settings=behavior.settings, shots=dshots
        )

    report = certify.certify_behavior(
        behavior,
        do_table=do_table,
        n_resamples=cfg.resamples,
        seed=cfg.seed,
        sigma_k=cfg.sigma_k,
        frozen_argmin=cfg.frozen_argmin,
    )
    return behavior, do_table, report


# --- emission ----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_curve(out_dir: str | Path, name: str, rows: Sequence[tuple]) -> Path:
    """Write one curve CSV (columns abscissa,value,stderr_lo,stderr_hi) with
    round-trip-precision numbers; missing stderr fields stay empty."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["abscissa", "value", "stderr_lo", "stderr_hi"])
        for row in rows:
            padded = tuple(row) + (None,) * (4 - len(row))
            writer.writerow([_fmt(v) for v in padded])
    return path


def emit_report(
    report: certify.CertReport,
    curves: Mapping[str, Sequence[tuple]] | None = None,
    out_dir: str | Path = ".",
) -> list[Path]:
    """Write report.json plus one CSV per named curve; returns written paths.

    Curve rows are (abscissa, value) or (abscissa, value, stderr_lo,
    stderr_hi); numbers are written with full round-trip precision and the
    output is byte-stable for identical inputs.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        report_path = out_dir / "report.json"
        report_path.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
        written.append(report_path)
        for name, rows in (curves or {}).items():
            written.append(write_curve(out_dir, name, rows))
        return written
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out_dir}: {exc}") from exc

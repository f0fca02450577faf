"""Fine-resolution TSFP reference solutions and their on-disk cache.

File layout under the cache root::

    <case_key>/tau<tau_e>/ref_eps<eps>_M<M>_t<t>.bin    snapshot
    <case_key>/tau<tau_e>/ref_eps<eps>_M<M>_t<t>.json   build metadata

Binary format (little-endian): magic ``DMTIREF1``, ``M: u32``, then
``eps, t, a, b: f64``, then ``M`` rows of ``(re1, im1, re2, im2)`` as f64.
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError
from ..spectral import Grid, SpinorField, make_grid, mass
from ..tsfp import tsfp_evolve
from .config import RunConfig, cache_root

MAGIC = b"DMTIREF1"
_HEADER = struct.Struct("<8sIdddd")

# snapshot times are compared after rounding to this many digits
_T_DIGITS = 12


@dataclass(frozen=True)
class ReferenceSnapshot:
    field: SpinorField
    eps: float
    t: float
    meta: dict

    @property
    def floor(self) -> float:
        """Smallest error the gate lets a study report against this snapshot."""
        return float(self.meta.get("floor", 0.0))


def _fmt_t(t: float) -> float:
    return round(float(t), _T_DIGITS)


def snapshot_path(config: RunConfig, eps: float, t: float, root: Optional[Path] = None) -> Path:
    root = Path(root) if root is not None else cache_root()
    M = config.reference_M
    d = root / config.case_key() / f"tau{config.reference.tau_e!r}"
    return d / f"ref_eps{float(eps)!r}_M{M}_t{_fmt_t(t)!r}.bin"


def write_snapshot(path: Path, field: SpinorField, eps: float, t: float) -> None:
    g = field.grid
    payload = np.empty((g.M, 4), dtype="<f8")
    payload[:, 0] = field.values[0].real
    payload[:, 1] = field.values[0].imag
    payload[:, 2] = field.values[1].real
    payload[:, 3] = field.values[1].imag
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.M, float(eps), float(t), g.a, g.b))
        fh.write(payload.tobytes())
    os.replace(tmp, path)


def read_snapshot(path: Path) -> tuple[SpinorField, float, float]:
    """Return ``(field, eps, t)``; raises ``ValueError`` on a malformed file."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, M, eps, t, a, b = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 4 * M:
        raise ValueError(f"{path}: expected {4 * M} values, found {body.size}")
    body = body.reshape(M, 4)
    values = np.stack((body[:, 0] + 1j * body[:, 1], body[:, 2] + 1j * body[:, 3]))
    return SpinorField(make_grid(a, b, M), values), eps, t


def _write_meta(path: Path, meta: dict) -> None:
    tmp = path.with_suffix(f".jtmp{os.getpid()}")
    tmp.write_text(json.dumps(meta, indent=1, sort_keys=True))
    os.replace(tmp, path.with_suffix(".json"))


def load_reference(config: RunConfig, eps: float, t: float, root: Optional[Path] = None) -> Optional[ReferenceSnapshot]:
    path = snapshot_path(config, eps, t, root)
    meta_path = path.with_suffix(".json")
    if not (path.exists() and meta_path.exists()):
        return None
    field, e, tt = read_snapshot(path)
    meta = json.loads(meta_path.read_text())
    if config.reference.check and "floor" not in meta:
        return None
    return ReferenceSnapshot(field, e, tt, meta)


def check_reference_config(config: RunConfig) -> None:
    """Refuse references that cannot serve as the exact solution of the study."""
    config.check_reference_refines()
    tau_e = config.reference.tau_e
    if config.method in ("mti", "tsfp") and tau_e > 0.1 * min(config.taus):
        raise ConfigError(f"reference tau_e={tau_e} is not much smaller than study tau={min(config.taus)}")


def _segments(times: list[float]):
    # integrate snapshot-to-snapshot so every stored time is hit exactly
    prev = 0.0
    for t in times:
        yield prev, t - prev, t
        prev = t


def _run(config: RunConfig, grid: Grid, eps: float, tau: float, times: list[float]) -> list[SpinorField]:
    sampler = config.sampler()
    field = config.initial(grid)
    out = []
    for t0, span, _ in _segments(times):
        if span > 0:
            field = tsfp_evolve(field, sampler, eps, tau, span, t0=t0).field
        out.append(field)
    return out


def make_reference(
    config: RunConfig,
    eps: float,
    times: Optional[list[float]] = None,
    root: Optional[Path] = None,
    force: bool = False,
) -> dict[float, ReferenceSnapshot]:
    """Build (or load) the TSFP reference for one ``eps`` at ``times``.

    Defaults to ``config.T`` plus ``config.reference.times``.  With
    ``reference.check`` a companion run at ``2 tau_e`` estimates the
    reference's own time error: for a second-order method the ``tau_e`` vs
    ``tau_e/2`` discrepancy is about a quarter of the ``2 tau_e`` vs
    ``tau_e`` one, and the reporting floor is ten times that estimate.
    """
    check_reference_config(config)
    if times is None:
        times = [config.T, *config.reference.times]
    times = sorted({_fmt_t(t) for t in times})
    if times[0] <= 0:
        raise ConfigError("reference snapshot times must be positive")

    if not force:
        have = {t: load_reference(config, eps, t, root) for t in times}
        if all(v is not None for v in have.values()):
            return have

    grid = config.reference_grid()
    tau_e = config.reference.tau_e
    fields = _run(config, grid, eps, tau_e, times)
    m0 = mass(config.initial(grid))
    coarse = _run(config, grid, eps, 2 * tau_e, times) if config.reference.check else None

    result = {}
    for k, (t, f) in enumerate(zip(times, fields)):
        meta = {
            "eps": float(eps),
            "t": t,
            "M": grid.M,
            "tau_e": tau_e,
            "domain": [grid.a, grid.b],
            "case": config.case_key(),
            "mass_drift": abs(mass(f) - m0) / m0,
        }
        if coarse is not None:
            d = float(np.sqrt(grid.h * np.sum(np.abs(f.values - coarse[k].values) ** 2)))
            meta["discrepancy_2tau"] = d
            meta["self_convergence"] = d / 4.0
            meta["floor"] = 10.0 * d / 4.0
        path = snapshot_path(config, eps, t, root)
        write_snapshot(path, f, eps, t)
        _write_meta(path, meta)
        result[t] = ReferenceSnapshot(f, float(eps), t, meta)
    return result

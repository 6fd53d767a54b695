"""Shoebox room impulse responses via the image source method.

Rectangular room, scalar per-wall absorption, reflections up to a fixed
order with an amplitude cutoff relative to the direct path. The direct
path lands at sample 0 with unit amplitude.
"""

from __future__ import annotations

import numpy as np

from .audio import Waveform

SPEED_OF_SOUND = 343.0


def shoebox_ir(
    dims,
    absorption,
    source,
    receiver,
    sample_rate: int,
    max_order: int = 12,
    rel_cutoff_db: float = -60.0,
    max_seconds: float = 2.0,
    c: float = SPEED_OF_SOUND,
) -> Waveform:
    """Image-source impulse response of a rectangular room.

    Parameters
    ----------
    dims : (3,) room size in meters.
    absorption : scalar or (6,) energy absorption per wall, order
        (x0, x1, y0, y1, z0, z1); wall reflection coefficient is
        sqrt(1 - absorption).
    source, receiver : (3,) positions in meters, inside the room.
    """
    dims = np.asarray(dims, dtype=np.float64)
    src = np.asarray(source, dtype=np.float64)
    rcv = np.asarray(receiver, dtype=np.float64)
    if np.any(dims <= 0):
        raise ValueError("room dimensions must be positive")
    if np.any(src <= 0) or np.any(src >= dims) or np.any(rcv <= 0) or np.any(rcv >= dims):
        raise ValueError("source and receiver must lie strictly inside the room")
    alpha = np.broadcast_to(np.asarray(absorption, dtype=np.float64), (6,))
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("absorption must be in [0, 1]")
    beta = np.sqrt(1.0 - alpha)  # (x0, x1, y0, y1, z0, z1)

    half = max_order // 2 + 1
    n = np.arange(-half, half + 1)
    q = np.array([0, 1])

    # per-axis image coordinates and wall-hit counts, shapes (len(n), 2)
    coord = []
    hits_lo = []  # wall at coordinate 0
    hits_hi = []  # wall at coordinate dims[axis]
    for ax in range(3):
        cc = (1 - 2 * q)[np.newaxis, :] * src[ax] + 2 * n[:, np.newaxis] * dims[ax]
        coord.append(cc)
        hits_lo.append(np.abs(n[:, np.newaxis] - q[np.newaxis, :]))
        hits_hi.append(np.abs(n)[:, np.newaxis] + np.zeros_like(q)[np.newaxis, :])

    # broadcast the three axes to a (len(n),2)^3 lattice
    def _bx(a, axis):
        shape = [1, 1, 1, 1, 1, 1]
        shape[2 * axis] = a.shape[0]
        shape[2 * axis + 1] = 2
        return a.reshape(shape)

    order = sum(_bx(hits_lo[ax] + hits_hi[ax], ax) for ax in range(3))
    keep = order <= max_order

    dist = np.sqrt(sum((_bx(coord[ax], ax) - rcv[ax]) ** 2 for ax in range(3)))
    amp = (
        _bx(beta[0] ** hits_lo[0] * beta[1] ** hits_hi[0], 0)
        * _bx(beta[2] ** hits_lo[1] * beta[3] ** hits_hi[1], 1)
        * _bx(beta[4] ** hits_lo[2] * beta[5] ** hits_hi[2], 2)
    ) / np.maximum(dist, 1e-6)

    d_direct = float(np.linalg.norm(src - rcv))
    a_direct = 1.0 / max(d_direct, 1e-6)
    amp = amp / a_direct  # unit direct-path amplitude
    keep &= amp >= 10.0 ** (rel_cutoff_db / 20.0)

    delays = (dist - d_direct) / c
    keep &= delays >= 0  # numerical guard; direct path is the earliest arrival
    samples = np.rint(delays[keep] * sample_rate).astype(np.int64)
    values = amp[keep]

    max_len = int(max_seconds * sample_rate)
    inside = samples < max_len
    samples, values = samples[inside], values[inside]
    ir = np.zeros(max(int(samples.max()) + 1 if samples.size else 1, 1))
    np.add.at(ir, samples, values)
    return Waveform(ir[np.newaxis, :], sample_rate)


def decay_time_db(ir: Waveform, drop_db: float = 60.0) -> float:
    """Seconds until the backward-integrated energy falls drop_db below start."""
    x = ir.data[0]
    energy = np.cumsum(x[::-1] ** 2)[::-1]
    energy = energy / max(energy[0], 1e-30)
    below = np.nonzero(energy < 10.0 ** (-drop_db / 10.0))[0]
    idx = below[0] if below.size else x.size
    return idx / ir.sample_rate

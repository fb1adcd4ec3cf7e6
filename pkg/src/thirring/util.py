"""Shared helpers: quadrature primitives, float formatting, hashing, threads."""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np


def cumtrapz(a, dx, axis=0):
    """Cumulative composite trapezoidal integral along `axis`, starting at 0.

    out[0] = 0 and out[k] = out[k-1] + dx*(a[k-1] + a[k])/2, so differences of
    two entries give the exact composite trapezoidal rule between the nodes.
    """
    a = np.asarray(a)
    sl_lo = [slice(None)] * a.ndim
    sl_hi = [slice(None)] * a.ndim
    sl_lo[axis] = slice(None, -1)
    sl_hi[axis] = slice(1, None)
    incr = 0.5 * dx * (a[tuple(sl_lo)] + a[tuple(sl_hi)])
    shape = list(a.shape)
    shape[axis] = 1
    zero = np.zeros(shape, dtype=incr.dtype)
    return np.concatenate([zero, np.cumsum(incr, axis=axis)], axis=axis)


def sup_abs(*arrays):
    """Max of |a| over all entries of all given arrays (0.0 if all empty)."""
    best = 0.0
    for a in arrays:
        a = np.asarray(a)
        if a.size:
            best = max(best, float(np.max(np.abs(a))))
    return best


def fmt17(value):
    """Decimal with 17 significant digits: round-trips IEEE 754 binary64."""
    return format(float(value), ".17g")


def canonical_json(payload):
    return json.dumps(payload, sort_keys=True, separators=(", ", ": "), indent=1)


def content_hash(payload, *arrays):
    """sha256 over a canonical-JSON payload plus the raw bytes of any arrays."""
    digest = hashlib.sha256()
    digest.update(canonical_json(payload).encode())
    for a in arrays:
        digest.update(np.ascontiguousarray(a).tobytes())
    return digest.hexdigest()


def thread_count():
    """Worker cap from THIRRING_THREADS (0 or unset = auto)."""
    raw = os.environ.get("THIRRING_THREADS", "0")
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"THIRRING_THREADS must be an integer, got {raw!r}")
    if k < 0:
        raise ValueError(f"THIRRING_THREADS must be >= 0, got {k}")
    if k == 0:
        return min(4, os.cpu_count() or 1)
    return k

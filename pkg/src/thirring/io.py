"""Artifact serialization: CSV field/slice dumps and JSON manifests.

All floats are written as 17-significant-digit decimals, which round-trips
IEEE 754 binary64 exactly; identical inputs therefore produce byte-identical
artifacts.  Timestamps never appear inside files, only in directory names
chosen by callers.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .model import InitialData
from .util import canonical_json, content_hash, fmt17

__all__ = [
    "write_manifest",
    "read_manifest",
    "write_fields_csv",
    "write_slice_csv",
    "read_slice_csv",
    "write_initial_data",
    "read_initial_data",
    "run_hash",
]


def write_manifest(path, payload):
    with open(path, "w") as fh:
        fh.write(canonical_json(payload))
        fh.write("\n")


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def run_hash(payload, *arrays):
    return content_hash(payload, *arrays)


def _write_rows(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt17(v) for v in row) + "\n")


def write_fields_csv(path, grid, pair):
    """Full-square dump: alpha, beta, Re psi, Im psi, Re phi, Im phi."""
    nodes = grid.nodes
    alpha = np.repeat(nodes, grid.n)
    beta = np.tile(nodes, grid.n)
    psi = pair.psi.ravel()
    phi = pair.phi.ravel()
    _write_rows(path, ["alpha", "beta", "Re psi", "Im psi", "Re phi", "Im phi"],
                [alpha, beta, psi.real, psi.imag, phi.real, phi.imag])


def write_slice_csv(path, t, x, psi, phi):
    """Lab-slice dump: t, x, Re psi, Im psi, Re phi, Im phi."""
    tcol = np.full(np.asarray(x).size, float(t))
    _write_rows(path, ["t", "x", "Re psi", "Im psi", "Re phi", "Im phi"],
                [tcol, x, np.real(psi), np.imag(psi), np.real(phi), np.imag(phi)])


def read_slice_csv(path):
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = float(raw[0, 0])
    x = raw[:, 1]
    psi = raw[:, 2] + 1j * raw[:, 3]
    phi = raw[:, 4] + 1j * raw[:, 5]
    return t, x, psi, phi


def write_initial_data(data: InitialData, csv_path, manifest_path=None):
    """CSV columns x, Re f, Im f, Re g, Im g plus a JSON generator manifest."""
    _write_rows(csv_path, ["x", "Re f", "Im f", "Re g", "Im g"],
                [data.x, data.f.real, data.f.imag, data.g.real, data.g.imag])
    if manifest_path:
        write_manifest(manifest_path, data.manifest)


def read_initial_data(csv_path, manifest_path=None):
    raw = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    x = raw[:, 0]
    f = raw[:, 1] + 1j * raw[:, 2]
    g = raw[:, 3] + 1j * raw[:, 4]
    manifest = read_manifest(manifest_path) if manifest_path else {}
    h = float(x[1] - x[0])
    return InitialData(float(x[0]), h, f, g, manifest)


def make_run_dir(base, name):
    path = os.path.join(base, name)
    os.makedirs(path, exist_ok=True)
    return path

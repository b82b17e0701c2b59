"""Complex dense linear algebra for linear-optical networks.

Interferometers are plain 2-D complex ``numpy`` arrays; Fock input and
output patterns are tuples of non-negative mode occupations.  This module
provides the unitarity guard, Haar-random unitary generation, the
sub-matrix construction whose permanent gives a multi-photon transition
amplitude, singular values for Schmidt decompositions, and the on-disk
matrix format used by the command-line tools.
"""

from __future__ import annotations

import itertools
import json
import math

import numpy as np

from .errors import ContractError, DataError, DimensionError
from .rng import derive_rng

__all__ = [
    "as_complex_matrix",
    "check_unitary",
    "haar_random_unitary",
    "transition_submatrix",
    "svd_singular_values",
    "as_occupation",
    "photon_count",
    "is_no_collision",
    "occupation_to_string",
    "occupation_from_string",
    "load_matrix",
    "save_matrix",
]

UNITARY_TOL = 1e-10


def as_complex_matrix(matrix) -> np.ndarray:
    """Validate and return ``matrix`` as a finite 2-D complex array."""
    out = np.asarray(matrix, dtype=complex)
    if out.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={out.ndim}")
    if out.size and not np.all(np.isfinite(out)):
        raise DataError("matrix entries must be finite (no NaN/Inf)")
    return out


def check_unitary(matrix, tol: float = UNITARY_TOL) -> bool:
    """Return True iff ``max |U†U - I| <= tol``.

    Raises
    ------
    DimensionError
        If the matrix is not square.
    """
    u = as_complex_matrix(matrix)
    rows, cols = u.shape
    if rows != cols:
        raise DimensionError(f"unitarity check needs a square matrix, got {rows}x{cols}")
    gram = u.conj().T @ u
    deviation = np.abs(gram - np.eye(rows)).max() if rows else 0.0
    return bool(deviation <= tol)


def haar_random_unitary(modes: int, seed: int) -> np.ndarray:
    """Draw a Haar-distributed ``modes x modes`` unitary, deterministically.

    Uses the QR decomposition of a complex Gaussian (Ginibre) matrix with
    the R diagonal normalized to unit phase, which makes the distribution
    exactly Haar rather than merely unitary.

    Parameters
    ----------
    modes : int
        Matrix dimension, at least 1.
    seed : int
        Root seed; the same seed always returns the same matrix.
    """
    if modes < 1:
        raise DimensionError("a unitary needs at least one mode")
    rng = derive_rng(seed, "haar-unitary")
    ginibre = rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))
    q, r = np.linalg.qr(ginibre / math.sqrt(2.0))
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def as_occupation(pattern, modes: int | None = None) -> tuple[int, ...]:
    """Validate a mode-occupation pattern and return it as a tuple of ints."""
    items = list(pattern)
    occ = tuple(int(x) for x in items)
    if any(x != y for x, y in zip(occ, items)):
        raise ContractError("occupations must be integers")
    if any(x < 0 for x in occ):
        raise ContractError("occupations must be non-negative")
    if modes is not None and len(occ) != modes:
        raise DimensionError(f"occupation has {len(occ)} modes, expected {modes}")
    return occ


def photon_count(pattern) -> int:
    """Total photon number of an occupation pattern."""
    return sum(as_occupation(pattern))


def is_no_collision(pattern) -> bool:
    """True iff every mode holds zero or one photon."""
    return all(x in (0, 1) for x in as_occupation(pattern))


def occupation_to_string(pattern) -> str:
    """Compact single-digit-per-mode encoding, e.g. ``(0,1,2) -> "012"``."""
    occ = as_occupation(pattern)
    if any(x > 9 for x in occ):
        raise ContractError("compact occupation strings support at most 9 photons per mode")
    return "".join(str(x) for x in occ)


def occupation_from_string(text: str) -> tuple[int, ...]:
    """Inverse of :func:`occupation_to_string`."""
    if not text or not text.isdigit():
        raise DataError(f"malformed occupation string: {text!r}")
    return tuple(int(c) for c in text)


def transition_submatrix(matrix, input_pattern, output_pattern) -> np.ndarray:
    """Build the n x n matrix whose permanent gives the Fock transition amplitude.

    Row i of the interferometer matrix is repeated ``input[i]`` times and
    column j is repeated ``output[j]`` times, so rows index occupied input
    modes and columns index occupied output modes.

    Raises
    ------
    ContractError
        If the input and output photon numbers differ.
    DimensionError
        If either pattern length does not match the matrix dimension.
    """
    u = as_complex_matrix(matrix)
    rows, cols = u.shape
    if rows != cols:
        raise DimensionError(f"interferometer matrix must be square, got {rows}x{cols}")
    s = as_occupation(input_pattern, rows)
    t = as_occupation(output_pattern, rows)
    n_in, n_out = sum(s), sum(t)
    if n_in != n_out:
        raise ContractError(f"photon number mismatch: input {n_in}, output {n_out}")
    row_idx = np.repeat(np.arange(rows), s)
    col_idx = np.repeat(np.arange(cols), t)
    return u[np.ix_(row_idx, col_idx)]


def svd_singular_values(matrix) -> np.ndarray:
    """Singular values of ``matrix`` in non-increasing order."""
    a = as_complex_matrix(matrix)
    return np.linalg.svd(a, compute_uv=False)


# --------------------------------------------------------------------------
# Matrix file format: JSON with fields "rows", "cols", "entries", where each
# entry is a two-element [re, im] array in row-major order.  An optional
# "meta" object carries provenance (seed, parameters) and is ignored on read.
# --------------------------------------------------------------------------


def _reject_constant(token: str):
    raise DataError(f"matrix file contains non-finite value {token!r}")


def load_matrix(path) -> np.ndarray:
    """Read a complex matrix from the JSON matrix format.

    Rejects files whose entries are NaN or infinite.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise DataError(f"not a valid matrix file: {exc}") from exc
    try:
        rows, cols = int(doc["rows"]), int(doc["cols"])
        entries = doc["entries"]
    except (KeyError, TypeError) as exc:
        raise DataError("matrix file must contain 'rows', 'cols' and 'entries'") from exc
    if len(entries) != rows * cols:
        raise DataError(f"expected {rows * cols} entries, found {len(entries)}")
    try:
        flat = np.array([complex(re, im) for re, im in entries], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise DataError("each entry must be a two-element [re, im] array") from exc
    return as_complex_matrix(flat.reshape(rows, cols))


def save_matrix(path, matrix, meta: dict | None = None) -> None:
    """Write a complex matrix in the JSON matrix format."""
    m = as_complex_matrix(matrix)
    doc = {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=None, separators=(",", ":"), sort_keys=False)
        fh.write("\n")


def enumerate_patterns(modes: int, photons: int, collisions: bool = True) -> list[tuple[int, ...]]:
    """All occupation patterns of ``photons`` photons over ``modes`` modes.

    With ``collisions=False`` only 0/1 patterns are produced.  The order is
    fixed (mode-index combinations in lexicographic order), so enumeration
    and anything sampled from it is reproducible.
    """
    if modes < 1:
        raise DimensionError("need at least one mode")
    if photons < 0:
        raise ContractError("photon number must be non-negative")
    chooser = itertools.combinations if not collisions else itertools.combinations_with_replacement
    out = []
    for modeset in chooser(range(modes), photons):
        pattern = [0] * modes
        for m in modeset:
            pattern[m] += 1
        out.append(tuple(pattern))
    return out


def count_patterns(modes: int, photons: int, collisions: bool = True) -> int:
    """Number of patterns :func:`enumerate_patterns` would produce."""
    if collisions:
        return math.comb(modes + photons - 1, photons)
    return math.comb(modes, photons) if photons <= modes else 0

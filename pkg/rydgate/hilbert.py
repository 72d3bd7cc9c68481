"""
Hilbert space of k control atoms (levels 0, 1, r) and N target atoms
(levels A, B, P, R).

Basis ordering: controls first (most significant), then targets, each atom
in its own level order. A flat index is the mixed-radix number built from
those digits (radix 3 for controls, radix 4 for targets).

Operators are kept as Kronecker-structured terms and applied matrix-free:
a single-site factor is applied by reshaping the state to
(left, d, right) and multiplying the d x d matrix into the middle axis.
"""

from dataclasses import dataclass, field
from math import prod
from typing import Literal

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, field_validator

CONTROL_LEVELS = ("0", "1", "r")
TARGET_LEVELS = ("A", "B", "P", "R")
CONTROL_DIM = len(CONTROL_LEVELS)
TARGET_DIM = len(TARGET_LEVELS)

DENSE_LIMIT = 256


def _check_counts(k: int, N: int) -> None:
    if k < 1 or N < 1:
        raise ValueError(f"need at least one control and one target atom, got k={k}, N={N}")


def hilbert_dim(k: int, N: int) -> int:
    _check_counts(k, N)
    return CONTROL_DIM**k * TARGET_DIM**N


def local_dims(k: int, N: int) -> tuple[int, ...]:
    _check_counts(k, N)
    return (CONTROL_DIM,) * k + (TARGET_DIM,) * N


# ---------------------------
# Basis labels
# ---------------------------
class BasisLabel(BaseModel):
    """
    Product basis state, e.g. controls ("1",) and targets ("A", "B").
    Text form: "1|AB".
    """
    model_config = ConfigDict(frozen=True)

    control_levels: tuple[str, ...]
    target_levels: tuple[str, ...]

    @field_validator("control_levels")
    @classmethod
    def _controls(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        if not value:
            raise ValueError("at least one control level is required")
        bad = [v for v in value if v not in CONTROL_LEVELS]
        if bad:
            raise ValueError(f"unknown control level(s) {bad}; expected {CONTROL_LEVELS}")
        return value

    @field_validator("target_levels")
    @classmethod
    def _targets(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        if not value:
            raise ValueError("at least one target level is required")
        bad = [v for v in value if v not in TARGET_LEVELS]
        if bad:
            raise ValueError(f"unknown target level(s) {bad}; expected {TARGET_LEVELS}")
        return value

    @classmethod
    def parse(cls, text: str) -> "BasisLabel":
        if "|" not in text:
            raise ValueError(f"label '{text}' must look like '01|AB'")
        controls, targets = text.strip().split("|", 1)
        return cls(control_levels=tuple(controls), target_levels=tuple(targets))

    @property
    def k(self) -> int:
        return len(self.control_levels)

    @property
    def N(self) -> int:
        return len(self.target_levels)

    def __str__(self) -> str:
        return "".join(self.control_levels) + "|" + "".join(self.target_levels)


def flat_index(label: BasisLabel, k: int, N: int) -> int:
    _check_counts(k, N)
    if label.k != k or label.N != N:
        raise ValueError(f"label {label} does not fit k={k}, N={N}")

    index = 0
    for level in label.control_levels:
        index = index * CONTROL_DIM + CONTROL_LEVELS.index(level)
    for level in label.target_levels:
        index = index * TARGET_DIM + TARGET_LEVELS.index(level)
    return index


def basis_label(index: int, k: int, N: int) -> BasisLabel:
    dim = hilbert_dim(k, N)
    if not 0 <= index < dim:
        raise ValueError(f"index {index} outside [0, {dim})")

    targets = []
    for _ in range(N):
        index, digit = divmod(index, TARGET_DIM)
        targets.append(TARGET_LEVELS[digit])
    controls = []
    for _ in range(k):
        index, digit = divmod(index, CONTROL_DIM)
        controls.append(CONTROL_LEVELS[digit])

    return BasisLabel(control_levels=tuple(reversed(controls)), target_levels=tuple(reversed(targets)))


def basis_vector(label: BasisLabel | str) -> np.ndarray:
    if isinstance(label, str):
        label = BasisLabel.parse(label)
    psi = np.zeros(hilbert_dim(label.k, label.N), dtype=complex)
    psi[flat_index(label, label.k, label.N)] = 1.0
    return psi


def digit_table(k: int, N: int) -> np.ndarray:
    """(dim, k+N) array with the level digit of every atom for each flat index."""
    dims = local_dims(k, N)
    grids = np.indices(dims).reshape(len(dims), -1)
    return grids.T


# ---------------------------
# Sites and site operators
# ---------------------------
@dataclass(frozen=True)
class Site:
    kind: Literal["control", "target"]
    index: int

    def axis(self, k: int, N: int) -> int:
        count = k if self.kind == "control" else N
        if not 0 <= self.index < count:
            raise ValueError(f"{self.kind} site {self.index} out of range for k={k}, N={N}")
        return self.index if self.kind == "control" else k + self.index


def control(index: int) -> Site:
    return Site("control", index)


def target(index: int) -> Site:
    return Site("target", index)


@dataclass(frozen=True)
class SiteOperator:
    site: Site
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        expected = CONTROL_DIM if self.site.kind == "control" else TARGET_DIM
        if matrix.shape != (expected, expected):
            raise ValueError(
                f"{self.site.kind} operator must be {expected}x{expected}, got {matrix.shape}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)


def projector(site: Site, level: str) -> SiteOperator:
    levels = CONTROL_LEVELS if site.kind == "control" else TARGET_LEVELS
    matrix = np.zeros((len(levels), len(levels)), dtype=complex)
    i = levels.index(level)
    matrix[i, i] = 1.0
    return SiteOperator(site, matrix)


# ---------------------------
# Kronecker-structured operators
# ---------------------------
def apply_local(matrix: np.ndarray, axis: int, dims: tuple[int, ...], psi: np.ndarray) -> np.ndarray:
    """Apply a single-site matrix on `axis`; psi may carry trailing batch columns."""
    left = prod(dims[:axis])
    d = dims[axis]
    out = matrix @ psi.reshape(left, d, -1)
    return out.reshape(psi.shape)


@dataclass(frozen=True)
class KronTerm:
    coefficient: complex
    factors: tuple[tuple[int, np.ndarray], ...]  # (axis, matrix), identity elsewhere


@dataclass(frozen=True)
class KronOperator:
    k: int
    N: int
    terms: tuple[KronTerm, ...] = ()
    diag: np.ndarray | None = field(default=None, repr=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return local_dims(self.k, self.N)

    @property
    def dim(self) -> int:
        return hilbert_dim(self.k, self.N)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        if psi.shape[0] != self.dim:
            raise ValueError(f"state has dimension {psi.shape[0]}, operator {self.dim}")

        dims = self.dims
        if self.diag is None:
            out = np.zeros_like(psi)
        else:
            out = self.diag.reshape((-1,) + (1,) * (psi.ndim - 1)) * psi

        for term in self.terms:
            part = psi
            for axis, matrix in term.factors:
                part = apply_local(matrix, axis, dims, part)
            out += term.coefficient * part
        return out

    def __matmul__(self, psi: np.ndarray) -> np.ndarray:
        return self.apply(psi)

    def __add__(self, other: "KronOperator") -> "KronOperator":
        if (self.k, self.N) != (other.k, other.N):
            raise ValueError("operators act on different layouts")
        if self.diag is None:
            diag = other.diag
        elif other.diag is None:
            diag = self.diag
        else:
            diag = self.diag + other.diag
        return KronOperator(self.k, self.N, self.terms + other.terms, diag)

    def scaled(self, factor: complex) -> "KronOperator":
        terms = tuple(KronTerm(t.coefficient * factor, t.factors) for t in self.terms)
        diag = None if self.diag is None else self.diag * factor
        return KronOperator(self.k, self.N, terms, diag)

    def _full_factors(self, term: KronTerm) -> list[np.ndarray]:
        factors = [np.eye(d, dtype=complex) for d in self.dims]
        for axis, matrix in term.factors:
            factors[axis] = factors[axis] @ matrix
        return factors

    def diagonal(self) -> np.ndarray:
        """diag(A ⊗ B) = diag(A) ⊗ diag(B), so no materialization is needed."""
        out = np.zeros(self.dim, dtype=complex) if self.diag is None else self.diag.astype(complex)
        for term in self.terms:
            vec = np.ones(1, dtype=complex)
            for factor in self._full_factors(term):
                vec = np.kron(vec, np.diag(factor))
            out = out + term.coefficient * vec
        return out

    def is_diagonal(self) -> bool:
        return all(
            np.count_nonzero(m - np.diag(np.diag(m))) == 0
            for term in self.terms
            for _, m in term.factors
        )

    def to_sparse(self) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        if self.diag is not None:
            out = out + sp.diags(self.diag)
        for term in self.terms:
            mat = sp.identity(1, dtype=complex, format="csr")
            for factor in self._full_factors(term):
                mat = sp.kron(mat, sp.csr_matrix(factor), format="csr")
            out = out + term.coefficient * mat
        return out.tocsr()

    def to_dense(self, max_dim: int = DENSE_LIMIT) -> np.ndarray:
        if self.dim > max_dim:
            raise ValueError(f"dense materialization limited to dim <= {max_dim}, got {self.dim}")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        if self.diag is not None:
            out += np.diag(self.diag)
        for term in self.terms:
            mat = np.ones((1, 1), dtype=complex)
            for factor in self._full_factors(term):
                mat = np.kron(mat, factor)
            out += term.coefficient * mat
        return out


def diagonal_operator(k: int, N: int, diag: np.ndarray) -> KronOperator:
    diag = np.asarray(diag, dtype=complex)
    if diag.shape != (hilbert_dim(k, N),):
        raise ValueError("diagonal has the wrong length")
    return KronOperator(k, N, (), diag)


def embed_site(op: SiteOperator, k: int, N: int) -> KronOperator:
    axis = op.site.axis(k, N)
    return KronOperator(k, N, (KronTerm(1.0, ((axis, op.matrix),)),))


def embed_pair(op_a: SiteOperator, op_b: SiteOperator, k: int, N: int) -> KronOperator:
    if op_a.site == op_b.site:
        raise ValueError(f"embed_pair needs two distinct sites, got {op_a.site} twice")
    axis_a = op_a.site.axis(k, N)
    axis_b = op_b.site.axis(k, N)
    factors = tuple(sorted(((axis_a, op_a.matrix), (axis_b, op_b.matrix)), key=lambda f: f[0]))
    return KronOperator(k, N, (KronTerm(1.0, factors),))

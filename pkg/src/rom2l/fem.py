"""Quadratic Lagrange finite elements on a uniform 1D mesh.

This module provides the full-order discretization layer: mesh
construction, nodal interpolation, mass/stiffness assembly, discrete
norms, and the trilinear convection form. Everything is built on a
3-point Gauss-Legendre rule, which integrates polynomials of degree
five exactly and is therefore exact for every product of quadratic
shape functions and their derivatives that appears in the forms below.

Element ``e`` of a mesh with ``n_elems`` elements owns the three global
nodes ``2e``, ``2e + 1``, ``2e + 2`` (vertex, midside, vertex), so a mesh
has ``2 * n_elems + 1`` nodes in total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import InvalidMesh, MeshMismatch

__all__ = [
    "REF_POINTS",
    "REF_WEIGHTS",
    "REF_SHAPE",
    "REF_DSHAPE",
    "Mesh1D",
    "FeFunction",
    "AssembledForms",
    "build_mesh",
    "element_connectivity",
    "quadrature_points",
    "eval_at_quadrature",
    "assemble_mass_stiffness",
    "interpolate",
    "evaluate",
    "l2_norm",
    "h1_seminorm",
    "trilinear_b",
    "trilinear_b_skew",
]

# 3-point Gauss-Legendre rule on the reference element [-1, 1].
REF_POINTS = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
REF_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def _shape(xi: np.ndarray) -> np.ndarray:
    """Quadratic Lagrange shapes at reference coordinates, shape (n, 3)."""
    xi = np.asarray(xi, dtype=float)
    return np.stack(
        [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)], axis=-1
    )


def _dshape(xi: np.ndarray) -> np.ndarray:
    """Reference derivatives of the quadratic Lagrange shapes, shape (n, 3)."""
    xi = np.asarray(xi, dtype=float)
    return np.stack([xi - 0.5, -2.0 * xi, xi + 0.5], axis=-1)


# Shape values and reference derivatives tabulated at the quadrature
# points: rows are quadrature points, columns are the three local nodes.
REF_SHAPE = _shape(REF_POINTS)
REF_DSHAPE = _dshape(REF_POINTS)


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Uniform mesh of quadratic elements on an interval.

    Attributes:
        a: left endpoint.
        b: right endpoint.
        h: element size ``(b - a) / n_elems``.
        n_elems: number of elements.
        nodes: node coordinates, length ``2 * n_elems + 1``.
    """

    a: float
    b: float
    h: float
    n_elems: int
    nodes: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return 2 * self.n_elems + 1


@dataclass(frozen=True, eq=False)
class FeFunction:
    """A finite element function given by its nodal coefficients."""

    mesh: Mesh1D
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.mesh.n_nodes,):
            raise MeshMismatch(
                f"coefficient vector has shape {coeffs.shape}, "
                f"mesh has {self.mesh.n_nodes} nodes"
            )
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True, eq=False)
class AssembledForms:
    """Mass and stiffness matrices for a mesh, in CSR format.

    ``mass`` and ``stiffness`` are restricted to the interior nodes
    (both boundary rows and columns removed); ``mass_full`` and
    ``stiffness_full`` keep all nodes.
    """

    mesh: Mesh1D
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    mass_full: sp.csr_matrix
    stiffness_full: sp.csr_matrix


def build_mesh(a: float, b: float, h: float) -> Mesh1D:
    """Build a uniform quadratic mesh on ``[a, b]`` with target element size ``h``.

    ``(b - a) / h`` must be a whole number to within a relative
    tolerance of 1e-9; the actual element size is recomputed from the
    rounded element count so the nodes exactly tile the interval.

    Raises:
        InvalidMesh: if ``a >= b``, ``h <= 0``, or ``h`` does not divide
            the interval length.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
        raise InvalidMesh(f"need a < b, got [{a}, {b}]")
    if not np.isfinite(h) or h <= 0:
        raise InvalidMesh(f"element size must be positive, got {h}")
    ratio = (b - a) / h
    n_elems = int(round(ratio))
    if n_elems < 1 or abs(ratio - n_elems) > 1e-9 * max(ratio, 1.0):
        raise InvalidMesh(f"element size {h} does not divide interval [{a}, {b}]")
    h_actual = (b - a) / n_elems
    nodes = a + 0.5 * h_actual * np.arange(2 * n_elems + 1)
    nodes[-1] = b
    return Mesh1D(a=float(a), b=float(b), h=h_actual, n_elems=n_elems, nodes=nodes)


def element_connectivity(mesh: Mesh1D) -> np.ndarray:
    """Global node indices per element, shape ``(n_elems, 3)``."""
    first = 2 * np.arange(mesh.n_elems)
    return first[:, None] + np.arange(3)[None, :]


def quadrature_points(mesh: Mesh1D) -> tuple[np.ndarray, np.ndarray]:
    """Physical quadrature points and weights for the whole mesh.

    Returns:
        Pair ``(x, w)`` of flat arrays with ``3 * n_elems`` entries each,
        ordered element by element. The weights include the Jacobian
        ``h / 2``, so ``w @ g(x)`` approximates the integral of ``g``.
    """
    mids = 0.5 * (mesh.nodes[0:-1:2] + mesh.nodes[2::2])
    x = (mids[:, None] + 0.5 * mesh.h * REF_POINTS[None, :]).ravel()
    w = np.tile(0.5 * mesh.h * REF_WEIGHTS, mesh.n_elems)
    return x, w


def eval_at_quadrature(mesh: Mesh1D, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and first derivatives of FE coefficient columns at quadrature points.

    Args:
        mesh: the mesh.
        coeffs: nodal coefficients, shape ``(n_nodes,)`` or ``(n_nodes, m)``.

    Returns:
        Pair ``(values, derivatives)`` with shape ``(3 * n_elems,)`` or
        ``(3 * n_elems, m)``, matching the ordering of
        :func:`quadrature_points`.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    single = coeffs.ndim == 1
    c = coeffs[:, None] if single else coeffs
    if c.shape[0] != mesh.n_nodes:
        raise MeshMismatch(
            f"coefficients have {c.shape[0]} rows, mesh has {mesh.n_nodes} nodes"
        )
    conn = element_connectivity(mesh)
    local = c[conn]  # (n_elems, 3, m)
    vals = np.einsum("gl,elm->egm", REF_SHAPE, local).reshape(-1, c.shape[1])
    ders = (2.0 / mesh.h) * np.einsum("gl,elm->egm", REF_DSHAPE, local).reshape(
        -1, c.shape[1]
    )
    if single:
        return vals[:, 0], ders[:, 0]
    return vals, ders


def _assemble(a: float, b: float, n_elems: int):
    h = (b - a) / n_elems
    me = 0.5 * h * np.einsum("g,gl,gm->lm", REF_WEIGHTS, REF_SHAPE, REF_SHAPE)
    ke = (2.0 / h) * np.einsum("g,gl,gm->lm", REF_WEIGHTS, REF_DSHAPE, REF_DSHAPE)
    conn = 2 * np.arange(n_elems)[:, None] + np.arange(3)[None, :]
    rows = np.repeat(conn, 3, axis=1).ravel()
    cols = np.tile(conn, (1, 3)).ravel()
    n = 2 * n_elems + 1
    mass_full = sp.csr_matrix(
        (np.tile(me.ravel(), n_elems), (rows, cols)), shape=(n, n)
    )
    stiff_full = sp.csr_matrix(
        (np.tile(ke.ravel(), n_elems), (rows, cols)), shape=(n, n)
    )
    interior = slice(1, n - 1)
    return (
        mass_full[interior, interior].tocsr(),
        stiff_full[interior, interior].tocsr(),
        mass_full,
        stiff_full,
    )


@lru_cache(maxsize=16)
def _assemble_cached(a: float, b: float, n_elems: int):
    return _assemble(a, b, n_elems)


def assemble_mass_stiffness(mesh: Mesh1D) -> AssembledForms:
    """Assemble the mass and stiffness matrices of a mesh.

    The result is cached on the mesh geometry ``(a, b, n_elems)``, so
    repeated calls for equivalent meshes are cheap.
    """
    mass, stiff, mass_full, stiff_full = _assemble_cached(
        mesh.a, mesh.b, mesh.n_elems
    )
    return AssembledForms(
        mesh=mesh,
        mass=mass,
        stiffness=stiff,
        mass_full=mass_full,
        stiffness_full=stiff_full,
    )


def interpolate(mesh: Mesh1D, f: Callable[[np.ndarray], np.ndarray]) -> FeFunction:
    """Nodal interpolant of a scalar function.

    ``f`` may be vectorized over numpy arrays or accept scalars only;
    a per-point fallback handles the latter.
    """
    try:
        vals = np.asarray(f(mesh.nodes), dtype=float)
        if vals.shape != mesh.nodes.shape:
            raise TypeError
    except TypeError:
        vals = np.array([float(f(x)) for x in mesh.nodes])
    return FeFunction(mesh=mesh, coeffs=vals)


def evaluate(u: FeFunction, x: np.ndarray) -> np.ndarray:
    """Evaluate an FE function at arbitrary points inside its interval.

    Points may lie anywhere in ``[a, b]``; values slightly outside (within
    1e-12 of the endpoints, e.g. from round-off) are clamped.
    """
    mesh = u.mesh
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    tol = 1e-12 * max(abs(mesh.a), abs(mesh.b), 1.0)
    if xs.min() < mesh.a - tol or xs.max() > mesh.b + tol:
        raise ValueError(f"points outside mesh interval [{mesh.a}, {mesh.b}]")
    xc = np.clip(xs, mesh.a, mesh.b)
    elem = np.minimum(((xc - mesh.a) / mesh.h).astype(int), mesh.n_elems - 1)
    mids = mesh.a + (elem + 0.5) * mesh.h
    xi = 2.0 * (xc - mids) / mesh.h
    local = u.coeffs[element_connectivity(mesh)[elem]]  # (n, 3)
    vals = np.einsum("nl,nl->n", _shape(xi), local)
    return vals[0] if scalar else vals


def l2_norm(u: FeFunction) -> float:
    """L2 norm of an FE function, computed through the mass matrix."""
    forms = assemble_mass_stiffness(u.mesh)
    return float(np.sqrt(u.coeffs @ (forms.mass_full @ u.coeffs)))


def h1_seminorm(u: FeFunction) -> float:
    """H1 seminorm (L2 norm of the derivative) through the stiffness matrix."""
    forms = assemble_mass_stiffness(u.mesh)
    return float(np.sqrt(u.coeffs @ (forms.stiffness_full @ u.coeffs)))


def _check_same_mesh(*funcs: FeFunction) -> Mesh1D:
    mesh = funcs[0].mesh
    for g in funcs[1:]:
        if g.mesh is mesh:
            continue
        same = (
            g.mesh.n_elems == mesh.n_elems
            and g.mesh.a == mesh.a
            and g.mesh.b == mesh.b
        )
        if not same:
            raise MeshMismatch("FE functions live on different meshes")
    return mesh


def trilinear_b(u: FeFunction, v: FeFunction, w: FeFunction) -> float:
    """Convection form ``integral of u * v' * w`` over the interval."""
    mesh = _check_same_mesh(u, v, w)
    _, wq = quadrature_points(mesh)
    uv, _ = eval_at_quadrature(mesh, u.coeffs)
    _, vd = eval_at_quadrature(mesh, v.coeffs)
    wv, _ = eval_at_quadrature(mesh, w.coeffs)
    return float(np.sum(wq * uv * vd * wv))


def trilinear_b_skew(u: FeFunction, v: FeFunction, w: FeFunction) -> float:
    """Skew-symmetrized convection form ``(b(u, v, w) - b(u, w, v)) / 2``.

    Antisymmetric in its last two arguments, so
    ``trilinear_b_skew(u, v, v) == 0`` for every ``u`` and ``v``.
    """
    return 0.5 * (trilinear_b(u, v, w) - trilinear_b(u, w, v))

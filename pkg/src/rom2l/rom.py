"""Galerkin-reduced operators for the steady Burgers equation.

With the reduced solution written as mean plus modal correction,
``u = u_mean + sum_j a_j phi_j``, testing the weak form against each
mode gives a small nonlinear system

    residual(a) = A a + (B : a x a) + b = 0,

where ``A`` collects the viscous term and the convection terms linear in
the correction (both couplings with the mean), ``B`` is the third-order
convection tensor ``B[i, j, k] = integral of phi_j * phi_k' * phi_i``,
and ``b`` holds everything independent of ``a``: the mean's own viscous
and convective contributions minus the projected forcing. ``A`` and
``B`` depend only on the basis and the viscosity; only ``b`` changes
with the forcing parameter, which is what makes the online stage cheap.

:class:`RomWorkspace` precomputes the parameter-independent pieces once
per basis at the largest dimension of interest; nested sub-blocks for
any smaller dimension are views into the same arrays.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .errors import DimensionError
from .manufactured import BurgersProblem, forcing_f
from .pod import PodBasis

__all__ = [
    "RomOperators",
    "RomWorkspace",
    "assemble_operators",
    "residual",
    "jacobian",
    "two_level_matrix_rhs",
    "dump_operators",
]


@dataclass(frozen=True, eq=False)
class RomOperators:
    """Reduced operators of one problem instance at one dimension.

    Attributes:
        dim: reduced dimension R.
        linear: matrix ``A``, shape (R, R), including the mean couplings.
        diffusion: the pure viscous part of ``A`` (symmetric positive
            definite), kept separate for diagnostics.
        quadratic: tensor ``B``, shape (R, R, R).
        constant: vector ``b``, shape (R,), for the current forcing.
        meta: provenance tags (viscosity, parameter, basis fingerprint).
    """

    dim: int
    linear: np.ndarray = field(repr=False)
    diffusion: np.ndarray = field(repr=False)
    quadratic: np.ndarray = field(repr=False)
    constant: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)


def _basis_fingerprint(basis: PodBasis) -> str:
    head = basis.modes[: min(8, basis.modes.shape[0]), : min(4, basis.rank)]
    return (
        f"rank={basis.rank};ip={basis.inner_product};"
        f"nodes={basis.mesh.n_nodes};head={hash(head.tobytes()):x}"
    )


class RomWorkspace:
    """Parameter-independent reduced operators, assembled once per basis.

    All quantities are stored at dimension ``r_max``; requesting a
    smaller dimension slices the leading block, so bases are nested by
    construction.

    Args:
        basis: the POD basis.
        r_max: largest reduced dimension this workspace will serve.
        nu: viscosity the operators are assembled with.
    """

    def __init__(self, basis: PodBasis, r_max: int, nu: float):
        if not 1 <= r_max <= basis.rank:
            raise DimensionError(
                f"workspace dimension {r_max} outside [1, {basis.rank}]"
            )
        if nu <= 0:
            raise ValueError(f"viscosity must be positive, got {nu}")
        self.basis = basis
        self.r_max = int(r_max)
        self.nu = float(nu)
        mesh = basis.mesh
        self.quad_x, wq = fem.quadrature_points(mesh)
        vals, ders = fem.eval_at_quadrature(mesh, basis.modes[:, :r_max])
        mean_val, mean_der = fem.eval_at_quadrature(mesh, basis.mean.coeffs)

        # A = nu * (phi_j', phi_i') + (mean * phi_j' + phi_j * mean', phi_i)
        self.diffusion = self.nu * (ders.T * wq) @ ders
        self.linear = (
            self.diffusion
            + (vals.T * (wq * mean_val)) @ ders
            + (vals.T * (wq * mean_der)) @ vals
        )
        # B[i, j, k] = (phi_j * phi_k', phi_i), built one i-slab at a time
        # to keep the working set small.
        quad = np.empty((r_max, r_max, r_max))
        for i in range(r_max):
            quad[i] = (vals * (wq * vals[:, i])[:, None]).T @ ders
        self.quadratic = quad
        # b = nu * (mean', phi_i') + (mean * mean', phi_i) - (f, phi_i);
        # the forcing term is applied per parameter via the load map.
        self.constant_base = self.nu * ders.T @ (wq * mean_der) + vals.T @ (
            wq * mean_val * mean_der
        )
        self.load_map = (vals * wq[:, None]).T  # maps f at quad points to (f, phi_i)
        self.fingerprint = _basis_fingerprint(basis)
        self._forcing_cache: dict[tuple, np.ndarray] = {}
        self._cache_lock = threading.Lock()
        self._slices: dict[int, tuple] = {}

    def _dim(self, r: int | None) -> int:
        r = self.r_max if r is None else int(r)
        if not 1 <= r <= self.r_max:
            raise DimensionError(f"dimension {r} outside [1, {self.r_max}]")
        return r

    def _blocks(self, r: int) -> tuple:
        """Leading blocks at dimension ``r``, cached as contiguous arrays."""
        blocks = self._slices.get(r)
        if blocks is None:
            blocks = (
                np.ascontiguousarray(self.linear[:r, :r]),
                np.ascontiguousarray(self.diffusion[:r, :r]),
                np.ascontiguousarray(self.quadratic[:r, :r, :r]),
                np.ascontiguousarray(self.constant_base[:r]),
                np.ascontiguousarray(self.load_map[:r]),
            )
            self._slices[r] = blocks
        return blocks

    def forcing_values(self, prob: BurgersProblem) -> np.ndarray:
        """Forcing sampled at the quadrature points, cached per problem."""
        key = (prob.q, prob.nu, prob.k, prob.sigma, prob.alpha, prob.beta)
        vals = self._forcing_cache.get(key)
        if vals is None:
            vals = forcing_f(prob, self.quad_x)
            with self._cache_lock:
                if len(self._forcing_cache) >= 8:
                    self._forcing_cache.pop(next(iter(self._forcing_cache)))
                self._forcing_cache[key] = vals
        return vals

    def load_vector(self, f_quad_values: np.ndarray, r: int | None = None) -> np.ndarray:
        """Constant vector ``b`` for forcing given by its quadrature values."""
        r = self._dim(r)
        _, _, _, base, load = self._blocks(r)
        return base - load @ f_quad_values

    def operators(self, prob: BurgersProblem, r: int | None = None) -> RomOperators:
        """Reduced operators for one problem instance at dimension ``r``."""
        if prob.nu != self.nu:
            raise ValueError(
                f"workspace was assembled with nu={self.nu}, problem has {prob.nu}"
            )
        r = self._dim(r)
        linear, diffusion, quadratic, base, load = self._blocks(r)
        b = base - load @ self.forcing_values(prob)
        return RomOperators(
            dim=r,
            linear=linear,
            diffusion=diffusion,
            quadratic=quadratic,
            constant=b,
            meta={"nu": self.nu, "q": prob.q, "basis": self.fingerprint},
        )


def assemble_operators(basis: PodBasis, R: int, prob: BurgersProblem) -> RomOperators:
    """Assemble the reduced operators of one problem at dimension ``R``.

    Convenience wrapper that builds a throwaway workspace; when many
    parameters or dimensions share one basis, build a
    :class:`RomWorkspace` once and reuse it.
    """
    return RomWorkspace(basis, R, prob.nu).operators(prob, R)


def _check_coeffs(ops: RomOperators, a: np.ndarray, name: str = "a") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (ops.dim,):
        raise DimensionError(
            f"{name} has shape {a.shape}, operators have dimension {ops.dim}"
        )
    return a


def residual(ops: RomOperators, a: np.ndarray) -> np.ndarray:
    """Nonlinear residual ``A a + B : (a x a) + b``."""
    a = _check_coeffs(ops, a)
    return ops.linear @ a + (ops.quadratic @ a) @ a + ops.constant


def jacobian(ops: RomOperators, a: np.ndarray) -> np.ndarray:
    """Jacobian of the residual: ``A + B(., a, .) + B(., ., a)``."""
    a = _check_coeffs(ops, a)
    return (
        ops.linear
        + np.tensordot(ops.quadratic, a, axes=(1, 0))
        + np.tensordot(ops.quadratic, a, axes=(2, 0))
    )


def two_level_matrix_rhs(
    ops: RomOperators, a_r: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Linear system of the two-level correction step.

    The coarse solution ``a_r`` (dimension r <= R) is zero-padded to the
    full dimension R of ``ops``; the correction step solves the residual
    linearized about that padded vector. Moving the known quadratic part
    to the right-hand side gives

        M = A + B(., pad, .) + B(., ., pad)
        rhs = B : (pad x pad) - b

    so ``M`` equals the Newton Jacobian at the padded vector, and if
    ``a_r`` already solves the dimension-R system exactly the solve
    returns it unchanged.

    Returns:
        Pair ``(M, rhs)`` with ``M`` of shape (R, R) and ``rhs`` of
        shape (R,).
    """
    a_r = np.asarray(a_r, dtype=float)
    if a_r.ndim != 1 or not 1 <= a_r.size <= ops.dim:
        raise DimensionError(
            f"coarse solution has shape {a_r.shape}, "
            f"needs 1 <= r <= {ops.dim}"
        )
    padded = np.zeros(ops.dim)
    padded[: a_r.size] = a_r
    matrix = jacobian(ops, padded)
    rhs = (ops.quadratic @ padded) @ padded - ops.constant
    return matrix, rhs


def dump_operators(ops: RomOperators, prefix) -> None:
    """Write the operators to CSV files ``<prefix>_{A,B,b}.csv``.

    ``A`` and ``b`` are plain matrices; the tensor ``B`` is written in
    flat indexed form with columns ``i, j, k, value``.
    """
    prefix = str(prefix)
    np.savetxt(prefix + "_A.csv", ops.linear, fmt="%.17g", delimiter=",")
    np.savetxt(prefix + "_b.csv", ops.constant[None, :], fmt="%.17g", delimiter=",")
    idx = np.indices(ops.quadratic.shape).reshape(3, -1).T
    flat = np.column_stack([idx, ops.quadratic.ravel()])
    np.savetxt(
        prefix + "_B.csv",
        flat,
        fmt=["%d", "%d", "%d", "%.17g"],
        delimiter=",",
        header="i,j,k,value",
        comments="",
    )

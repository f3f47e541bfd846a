"""Group-agnostic Lie group interface.

Group elements are plain numpy arrays whose trailing shape is fixed by the
group (rotation matrices, planar poses, homogeneous matrices).  Algebra
vectors are real n-vectors in a fixed per-group basis.  All operations accept
stacked arrays with arbitrary leading (batch) dimensions and are pure
functions, so they are safe to call concurrently.
"""

import numpy as np

# Tolerance for manifold-constraint checks (e.g. Q^T Q = I on rotation blocks).
TAU_MANIFOLD = 1e-9


class GroupError(ValueError):
    """Usage error: wrong group, wrong shapes, or element off the manifold."""


def matvec(M, x):
    """Batched matrix-vector product M @ x over the trailing two/one axes."""
    return np.einsum("...ij,...j->...i", M, x)


class LieGroup:
    """Base class for concrete groups.

    Subclasses define ``name``, algebra dimension ``dim``, the trailing
    ``element_shape`` of element arrays, and the primitive operations
    ``identity``, ``compose``, ``inverse``, ``adjoint_matrix``, ``bracket``,
    ``exp``, ``reproject``, ``manifold_defect``, ``random``, ``embed`` and the
    payload (CSV) conversions.  Everything else is derived here.
    """

    name = "abstract"
    dim = 0
    element_shape = ()

    # -- shape / validity helpers -------------------------------------------------

    def require_element(self, g):
        g = np.asarray(g, dtype=float)
        k = len(self.element_shape)
        if g.ndim < k or g.shape[g.ndim - k:] != self.element_shape:
            raise GroupError(
                f"{self.name}: expected element array with trailing shape "
                f"{self.element_shape}, got {g.shape}"
            )
        return g

    def require_algebra(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1:] != (self.dim,):
            raise GroupError(
                f"{self.name}: expected algebra vector of length {self.dim}, "
                f"got shape {xi.shape}"
            )
        return xi

    def check(self, g, tol=TAU_MANIFOLD):
        """Raise GroupError if any element violates the manifold constraint."""
        defect = self.manifold_defect(self.require_element(g))
        worst = float(np.max(defect))
        if not np.isfinite(worst) or worst > tol:
            raise GroupError(f"{self.name}: element off the manifold (defect={worst:.3e})")

    def identity_like(self, n):
        """Stack of n identity elements."""
        e = self.identity()
        return np.broadcast_to(e, (n,) + self.element_shape).copy()

    # -- derived operations -------------------------------------------------------

    def adjoint(self, g, xi):
        """Adjoint action of g on an algebra vector."""
        return matvec(self.adjoint_matrix(g), self.require_algebra(xi))

    def left_relative(self, g_k, g_j):
        """Relative position g_k^-1 g_j (invariant under common left translation)."""
        return self.compose(self.inverse(g_k), g_j)

    def right_relative(self, g_k, g_j):
        """Relative position g_j g_k^-1 (invariant under common right translation)."""
        return self.compose(g_j, self.inverse(g_k))

    def ad_matrix(self, xi):
        """Matrix of the map bracket(xi, .) in algebra coordinates."""
        xi = self.require_algebra(xi)
        basis = np.eye(self.dim)
        cols = self.bracket(xi[..., None, :], basis)  # [..., j, :] = [xi, e_j]
        return np.swapaxes(cols, -1, -2)

    def pairing(self, xi, eta):
        """Bilinear map <xi, eta> = ad_xi^T eta.

        It is the unique solution of z1 . <z2, z3> + [z1, z2] . z3 = 0 under
        the canonical scalar product of the algebra basis.
        """
        return np.einsum("...ij,...i->...j", self.ad_matrix(xi), self.require_algebra(eta))

    def random_algebra(self, rng, shape=(), scale=1.0):
        """Gaussian algebra vectors of the given batch shape."""
        if isinstance(shape, int):
            shape = (shape,)
        return scale * rng.standard_normal(tuple(shape) + (self.dim,))

    def allclose(self, g, h, tol=1e-9):
        """Elementwise closeness in the embedding coordinates."""
        return bool(np.max(np.abs(self.embed(g) - self.embed(h))) <= tol)

    # -- primitives implemented per group ------------------------------------------

    def identity(self):
        raise NotImplementedError

    def compose(self, g, h):
        raise NotImplementedError

    def inverse(self, g):
        raise NotImplementedError

    def adjoint_matrix(self, g):
        raise NotImplementedError

    def bracket(self, xi, eta):
        raise NotImplementedError

    def exp(self, xi):
        raise NotImplementedError

    def reproject(self, g):
        raise NotImplementedError

    def manifold_defect(self, g):
        raise NotImplementedError

    def random(self, rng, n=None, pos_scale=1.0, rot_scale=None):
        raise NotImplementedError

    def embed(self, g):
        """Continuous embedding coordinates, used for drift measurements."""
        raise NotImplementedError

    # CSV payload interface
    payload_columns = ()

    def to_payload(self, g):
        raise NotImplementedError

    def from_payload(self, arr):
        raise NotImplementedError

    def __repr__(self):
        return f"<LieGroup {self.name}>"

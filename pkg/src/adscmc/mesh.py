"""Polar finite-volume mesh on a truncated Poincare disk.

Nodes live on concentric rings of constant hyperbolic radius.  Node ids are
flat: id 0 is the center, ring i (1-based) occupies ids 1 + (i-1)*n_theta
through i*n_theta.  The outermost ring is the Dirichlet boundary; everything
else is interior.  Because of that layout the interior ids are exactly
0 .. n_interior-1, which the solver exploits when indexing unknowns.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class DiskMesh:
    R_max: float
    n_r: int
    n_theta: int
    h_r: float = field(init=False)
    h_theta: float = field(init=False)

    def __post_init__(self):
        if not (1.0 <= self.R_max <= 8.0):
            raise ConfigError(f"R_max = {self.R_max} outside [1, 8]")
        if self.n_r < 8:
            raise ConfigError(f"n_r = {self.n_r} below minimum 8")
        if self.n_theta < 16 or self.n_theta % 2:
            raise ConfigError(f"n_theta = {self.n_theta} must be even and >= 16")
        object.__setattr__(self, "h_r", self.R_max / self.n_r)
        object.__setattr__(self, "h_theta", 2.0 * np.pi / self.n_theta)

    @property
    def n_nodes(self):
        return 1 + self.n_r * self.n_theta

    @property
    def n_interior(self):
        return 1 + (self.n_r - 1) * self.n_theta

    def ring_of(self, node_id):
        """Ring index of a node id (0 for the center)."""
        node_id = np.asarray(node_id)
        return np.where(node_id == 0, 0, (node_id - 1) // self.n_theta + 1)

    def node_id(self, ring, j):
        """Flat id of ring/angle indices; ring 0 ignores j."""
        ring = np.asarray(ring)
        j = np.asarray(j)
        return np.where(ring == 0, 0, 1 + (ring - 1) * self.n_theta + j % self.n_theta)

    def radii(self):
        """Hyperbolic radius per node (0 at the center)."""
        s = np.empty(self.n_nodes)
        s[0] = 0.0
        ring = np.arange(1, self.n_r + 1)
        s[1:] = np.repeat(ring * self.h_r, self.n_theta)
        return s

    def angles(self):
        """Angular coordinate per node (0 at the center by convention)."""
        th = np.empty(self.n_nodes)
        th[0] = 0.0
        th[1:] = np.tile(np.arange(self.n_theta) * self.h_theta, self.n_r)
        return th

    def disk_points(self):
        """Poincare-disk coordinate per node, |z| = tanh(s/2)."""
        return np.tanh(self.radii() / 2.0) * np.exp(1j * self.angles())

    def boundary_mask(self):
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.n_interior:] = True
        return mask

    def boundary_angles(self):
        """Angles of the outer-ring nodes, in node order."""
        return np.arange(self.n_theta) * self.h_theta


def build_mesh(R_max, n_r, n_theta):
    """Polar mesh with rings at s_i = R_max * i / n_r and n_theta sectors."""
    return DiskMesh(float(R_max), int(n_r), int(n_theta))

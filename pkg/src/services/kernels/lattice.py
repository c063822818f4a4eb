import numpy as np

from models.errors import UnsupportedError
from services.kernels.base_kernel import BaseKernel, Row

_STEPS_2D = ((1, 0), (-1, 0), (0, 1), (0, -1))


class LatticeKernel(BaseKernel):
    """Simple random walk on Z (integer vertices) or Z^2 (tuple vertices), generated lazily."""

    def __init__(self, dim: int):
        if dim not in (1, 2):
            raise UnsupportedError(f"lattice dimension {dim!r} is not supported (use 1 or 2)")
        self.dim = dim
        super().__init__(origin=0 if dim == 1 else (0, 0))

    def get_kernel_name(self) -> str:
        return f"lattice-Z{self.dim}" if self.dim > 1 else "lattice-Z"

    def contains(self, v) -> bool:
        if self.dim == 1:
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)
        return (isinstance(v, tuple) and len(v) == 2
                and all(isinstance(a, (int, np.integer)) for a in v))

    def norm(self, v) -> int:
        if self.dim == 1:
            return abs(int(v))
        return abs(int(v[0])) + abs(int(v[1]))

    def transition_row(self, v) -> Row:
        self.require(v)
        if self.dim == 1:
            return [(v + 1, 0.5), (v - 1, 0.5)]
        x, y = v
        return [((x + dx, y + dy), 0.25) for dx, dy in _STEPS_2D]

    def step(self, v, rng):
        self.require(v)
        u = rng.random()
        if self.dim == 1:
            return v + 1 if u < 0.5 else v - 1
        dx, dy = _STEPS_2D[min(int(u * 4.0), 3)]
        return (v[0] + dx, v[1] + dy)


def make_lattice_kernel(dim: int) -> LatticeKernel:
    return LatticeKernel(dim)

from abc import ABC, abstractmethod
from typing import Hashable, List, Tuple

from models.errors import UnknownVertexError

Vertex = Hashable
Row = List[Tuple[Vertex, float]]

ROW_TOLERANCE = 1e-12


class BaseKernel(ABC):
    """
    Abstract base class for the unit-time walks X underlying an impatient walk.
    Each kernel implementation must inherit from this class and implement all abstract methods.

    Kernels are immutable after construction. step() takes the RNG handle explicitly
    and always draws exactly one uniform from it, so any object with a random()
    method can drive a kernel.
    """

    # Orbit-type kernels move one way around their orbits and opt out of the
    # two-way edge positivity check.
    reversible = True

    def __init__(self, origin: Vertex):
        self.origin = origin
        self.kernel_name = self.get_kernel_name()

    @abstractmethod
    def get_kernel_name(self) -> str:
        """
        Return the kernel name (e.g., 'nearest-neighbor', 'orbit').
        This is used in harness output.
        """
        pass

    @abstractmethod
    def contains(self, v: Vertex) -> bool:
        """Whether v is a vertex of the kernel's graph."""
        pass

    @abstractmethod
    def transition_row(self, v: Vertex) -> Row:
        """
        Outgoing transition probabilities of v.

        Args:
            v: A vertex of the graph

        Returns:
            List of (neighbour, probability) pairs in a fixed order; the
            probabilities are positive and sum to 1.
        """
        pass

    @abstractmethod
    def norm(self, v: Vertex) -> int:
        """Graph distance ||v|| from the origin."""
        pass

    def edge_norm(self, u: Vertex, v: Vertex) -> int:
        """||e|| = min of the endpoint distances."""
        return min(self.norm(u), self.norm(v))

    def require(self, v: Vertex) -> None:
        if not self.contains(v):
            raise UnknownVertexError(f"{v!r} is not a vertex of the {self.kernel_name} kernel")

    def neighbors(self, v: Vertex) -> List[Vertex]:
        return [u for u, _ in self.transition_row(v)]

    def transition_probability(self, v: Vertex, u: Vertex) -> float:
        for w, p in self.transition_row(v):
            if w == u:
                return p
        return 0.0

    def step(self, v: Vertex, rng) -> Vertex:
        """
        Sample the next vertex from v's row using a single uniform draw.

        Args:
            v: Current vertex
            rng: Anything with a random() method returning a float in [0, 1)

        Returns:
            The sampled neighbour
        """
        self.require(v)
        row = self.transition_row(v)
        u = rng.random()
        acc = 0.0
        for w, p in row:
            acc += p
            if u < acc:
                return w
        return row[-1][0]

    def check_row(self, v: Vertex, tol: float = ROW_TOLERANCE) -> None:
        """
        Validate stochasticity of v's row (and the reverse edges when reversible).

        Raises:
            UnknownVertexError: if the row is malformed
        """
        row = self.transition_row(v)
        total = sum(p for _, p in row)
        if abs(total - 1.0) > tol:
            raise UnknownVertexError(f"row of {v!r} sums to {total!r}")
        for u, p in row:
            if not p > 0.0:
                raise UnknownVertexError(f"edge {v!r} -> {u!r} has probability {p!r}")
            if self.reversible and not self.transition_probability(u, v) > 0.0:
                raise UnknownVertexError(f"edge {u!r} -> {v!r} has no reverse probability")

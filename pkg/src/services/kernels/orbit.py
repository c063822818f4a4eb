from typing import Dict, List, Tuple

from services.kernels.base_kernel import Row
from services.kernels.graph import GraphKernel

Point = Tuple[int, int]


def orbit_index(v: Point) -> int:
    """Sup-norm orbit O_k containing v."""
    return max(abs(v[0]), abs(v[1]))


def orbit_vertices(k: int) -> List[Point]:
    """The 8k vertices of O_k, clockwise from the top-left corner."""
    if k == 0:
        return [(0, 0)]
    out = []
    v = (-k, k)
    for _ in range(8 * k):
        out.append(v)
        v = clockwise(v)
    return out


def clockwise(v: Point) -> Point:
    x, y = v
    k = orbit_index(v)
    if y == k and x < k:
        return (x + 1, y)
    if x == k and y > -k:
        return (x, y - 1)
    if y == -k and x > -k:
        return (x - 1, y)
    return (x, y + 1)


def _sign(a: int) -> int:
    return (a > 0) - (a < 0)


def is_corner(v: Point) -> bool:
    return v != (0, 0) and abs(v[0]) == abs(v[1])


def radial_neighbors(v: Point) -> Tuple[Point, Point]:
    """
    (inward, outward) targets of v, always lattice neighbours.

    On a side they are the perpendicular neighbours on O_{k-1} and O_{k+1}. A
    corner has no neighbour on O_{k-1}: its inward mass goes to the
    counterclockwise neighbour on O_k, and its outward mass to the neighbour on
    O_{k+1} across the side the clockwise move runs along.
    """
    x, y = v
    k = orbit_index(v)
    if is_corner(v):
        sx, sy = _sign(x), _sign(y)
        cx, _ = clockwise(v)
        if cx == x:
            # clockwise runs down or up the side x = sx*k
            return (x - sx, y), (x + sx, y)
        return (x, y - sy), (x, y + sy)
    if abs(y) == k:
        sy = _sign(y)
        return (x, sy * (k - 1)), (x, sy * (k + 1))
    sx = _sign(x)
    return (sx * (k - 1), y), (sx * (k + 1), y)


class OrbitKernel(GraphKernel):
    """
    Z^2 walk that circles the sup-norm squares O_k clockwise.

    From a side vertex of O_k it moves inward with probability (2/3)2^-k, outward
    with (1/3)2^-k and clockwise along O_k otherwise. Corners keep the same three
    masses but send the inward one counterclockwise along O_k (see
    radial_neighbors). On the last orbit the outward mass is added to the inward
    mass. Every move is along a lattice edge.
    """

    reversible = False

    def __init__(self, k_max: int):
        self.k_max = k_max
        super().__init__(_orbit_rows(k_max), origin=(0, 0))

    def get_kernel_name(self) -> str:
        return "orbit"


def _orbit_rows(k_max: int) -> Dict[Point, Row]:
    rows: Dict[Point, Row] = {(0, 0): [((0, 1), 0.25), ((1, 0), 0.25), ((0, -1), 0.25), ((-1, 0), 0.25)]}
    for k in range(1, k_max + 1):
        inward = (2.0 / 3.0) * 2.0 ** -k
        outward = (1.0 / 3.0) * 2.0 ** -k
        around = 1.0 - 2.0 ** -k
        for v in orbit_vertices(k):
            inner, outer = radial_neighbors(v)
            if k == k_max:
                rows[v] = [(clockwise(v), around), (inner, inward + outward)]
            else:
                rows[v] = [(clockwise(v), around), (inner, inward), (outer, outward)]
    return rows


def make_orbit_kernel(k_max: int) -> OrbitKernel:
    """
    The Z^2 orbit walk truncated at O_{k_max}.

    Raises:
        ValueError: if k_max < 2
    """
    if int(k_max) != k_max or k_max < 2:
        raise ValueError(f"k_max must be an integer >= 2, got {k_max!r}")
    return OrbitKernel(int(k_max))

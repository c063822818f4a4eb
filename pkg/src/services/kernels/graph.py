from collections import deque
from typing import Dict, Mapping

from models.errors import UnknownVertexError
from services.kernels.base_kernel import BaseKernel, Row, Vertex


class GraphKernel(BaseKernel):
    """
    A finite graph with explicit row-stochastic transition probabilities.

    Distances ||v|| are graph distances to the origin in the undirected graph
    spanned by the rows.
    """

    def __init__(self, rows: Mapping[Vertex, Row], origin: Vertex, validate: bool = True):
        self._rows: Dict[Vertex, Row] = {v: list(row) for v, row in rows.items()}
        super().__init__(origin=origin)
        if origin not in self._rows:
            raise UnknownVertexError(f"origin {origin!r} has no transition row")
        self._distances = self._bfs_distances()
        if validate:
            self.validate()

    def get_kernel_name(self) -> str:
        return "graph"

    @property
    def vertices(self):
        return list(self._rows)

    def contains(self, v) -> bool:
        try:
            return v in self._rows
        except TypeError:
            return False

    def transition_row(self, v) -> Row:
        self.require(v)
        return self._rows[v]

    def norm(self, v) -> int:
        self.require(v)
        return self._distances[v]

    def _bfs_distances(self) -> Dict[Vertex, int]:
        adjacency: Dict[Vertex, set] = {v: set() for v in self._rows}
        for v, row in self._rows.items():
            for u, _ in row:
                if u not in adjacency:
                    raise UnknownVertexError(f"row of {v!r} points to unknown vertex {u!r}")
                adjacency[v].add(u)
                adjacency[u].add(v)
        dist = {self.origin: 0}
        queue = deque([self.origin])
        while queue:
            v = queue.popleft()
            for u in adjacency[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist

    def validate(self) -> None:
        """
        Check every row and connectivity.

        Raises:
            UnknownVertexError: on a malformed row or an unreachable vertex
        """
        missing = [v for v in self._rows if v not in self._distances]
        if missing:
            raise UnknownVertexError(f"graph is not connected, e.g. {missing[0]!r}")
        for v in self._rows:
            self.check_row(v)

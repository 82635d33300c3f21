"""Deterministic 2D coordinate generation for molecular graphs.

Simple rings become regular polygons (edge = bond length), acyclic chains
zig-zag at 120 degrees, substituents divide the largest free angular gap
around their anchor atom, and disconnected fragments tile left to right.
Aesthetics are a non-goal; only determinism and pixel-level geometry
matter downstream.
"""

from __future__ import annotations

import math

import networkx as nx
import numpy as np

BOND_LENGTH = 1.5
MIN_NONBONDED_DIST = 0.9
FRAGMENT_GAP = 3.0

# branch-angle offsets tried in order when non-bonded atoms collide
PERTURB_SEQUENCE = (0.0, 10.0, -10.0, 20.0, -20.0, 30.0, -30.0)


class LayoutOverlap(RuntimeError):
    """Non-bonded atoms closer than the minimum separation after all retries."""


def generate_coords(mol, bond_length: float = BOND_LENGTH) -> np.ndarray:
    """Compute (N, 2) coordinates in Angstroms for every atom of `mol`.

    Deterministic: the same molecule always yields bit-identical output.
    Raises LayoutOverlap when no perturbation retry separates colliding
    non-bonded atoms.
    """
    n = len(mol.atoms)
    if n == 0:
        return np.zeros((0, 2), dtype=np.float64)

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(b.key() for b in mol.bonds)

    for perturb in PERTURB_SEQUENCE:
        coords = _attempt_layout(graph, bond_length, math.radians(perturb))
        if not _has_collision(coords, graph):
            return coords
    raise LayoutOverlap(
        f"non-bonded atoms within {MIN_NONBONDED_DIST} A after all "
        f"perturbation retries ({mol.name or 'unnamed molecule'})"
    )


def center_and_rotate(coords: np.ndarray, angle: float) -> np.ndarray:
    """Translate the bounding-box center to the origin, then rotate.

    `angle` is in degrees, counterclockwise. Pure isometry: all pairwise
    distances are preserved.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.size == 0:
        return coords.copy()
    center = (coords.min(axis=0) + coords.max(axis=0)) / 2.0
    shifted = coords - center
    rad = math.radians(angle)
    c, s = math.cos(rad), math.sin(rad)
    rot = np.array([[c, -s], [s, c]], dtype=np.float64)
    return shifted @ rot.T


def _has_collision(coords: np.ndarray, graph: nx.Graph) -> bool:
    n = len(coords)
    if n < 2:
        return False
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    ii, jj = np.triu_indices(n, k=1)
    close = dist[ii, jj] < MIN_NONBONDED_DIST
    for i, j in zip(ii[close], jj[close]):
        if not graph.has_edge(int(i), int(j)):
            return True
    return False


def _attempt_layout(graph: nx.Graph, bond_length: float,
                    perturb: float) -> np.ndarray:
    coords = np.zeros((graph.number_of_nodes(), 2), dtype=np.float64)
    fragments = sorted(nx.connected_components(graph), key=min)
    cursor = 0.0
    for fragment in fragments:
        placer = _FragmentPlacer(graph, sorted(fragment), bond_length, perturb)
        local = placer.run()
        xs = [local[i][0] for i in fragment]
        ys = [local[i][1] for i in fragment]
        shift_x = cursor - min(xs)
        shift_y = -(min(ys) + max(ys)) / 2.0
        for i in fragment:
            coords[i] = (local[i][0] + shift_x, local[i][1] + shift_y)
        cursor += (max(xs) - min(xs)) + FRAGMENT_GAP
    return coords


class _FragmentPlacer:
    """Breadth-first placement of one connected component."""

    def __init__(self, graph, nodes, bond_length, perturb):
        self.graph = graph
        self.nodes = nodes
        self.length = bond_length
        self.perturb = perturb
        self.pos: dict[int, tuple[float, float]] = {}
        self.zig: dict[int, int] = {}
        self.incoming: dict[int, float] = {}
        sub = graph.subgraph(nodes)
        self.cycles = [_order_cycle(sub, c) for c in
                       sorted(nx.minimum_cycle_basis(sub), key=min)]
        self.cycle_placed = [False] * len(self.cycles)
        self.cycles_of: dict[int, list[int]] = {}
        for ci, cycle in enumerate(self.cycles):
            for a in cycle:
                self.cycles_of.setdefault(a, []).append(ci)

    def run(self) -> dict[int, tuple[float, float]]:
        start = self.nodes[0]
        self.pos[start] = (0.0, 0.0)
        self.zig[start] = -1
        queue = [start]
        for ci in self.cycles_of.get(start, []):
            self._place_cycle(ci, queue)
        while queue:
            u = queue.pop(0)
            self._expand(u, queue)
        return self.pos

    # -- expansion ---------------------------------------------------------

    def _expand(self, u, queue):
        for ci in self.cycles_of.get(u, []):
            if not self.cycle_placed[ci]:
                self._place_cycle(ci, queue)
        fresh = sorted(v for v in self.graph.neighbors(u)
                       if v not in self.pos)
        if not fresh:
            return
        existing = [self._angle_to(u, v) for v in
                    sorted(self.graph.neighbors(u)) if v in self.pos]
        if len(existing) == 1 and len(fresh) == 1 and u in self.incoming:
            # chain continuation: turn 60 degrees, alternating side
            angle = self.incoming[u] + self.zig[u] * math.radians(60.0)
            angle += self.perturb
            self._place(fresh[0], u, angle, queue)
        else:
            for v, angle in zip(fresh, _gap_fill(existing, len(fresh))):
                self._place(v, u, angle + self.perturb, queue)

    def _place(self, v, parent, angle, queue):
        px, py = self.pos[parent]
        self.pos[v] = (px + self.length * math.cos(angle),
                       py + self.length * math.sin(angle))
        self.incoming[v] = angle
        self.zig[v] = -self.zig.get(parent, -1)
        queue.append(v)

    def _angle_to(self, u, v):
        ux, uy = self.pos[u]
        vx, vy = self.pos[v]
        return math.atan2(vy - uy, vx - ux)

    # -- ring placement ----------------------------------------------------

    def _place_cycle(self, ci, queue):
        cycle = self.cycles[ci]
        self.cycle_placed[ci] = True
        placed = [a for a in cycle if a in self.pos]
        if not placed:
            # isolated start inside a ring: anchor at the fragment origin
            anchor = cycle[0]
            self.pos.setdefault(anchor, (0.0, 0.0))
            self.zig.setdefault(anchor, -1)
            self._polygon_from_anchor(cycle, anchor, 0.0, queue)
        elif len(placed) == 1:
            anchor = placed[0]
            existing = [self._angle_to(anchor, v) for v in
                        sorted(self.graph.neighbors(anchor))
                        if v in self.pos]
            direction = _gap_fill(existing, 1)[0] if existing else 0.0
            self._polygon_from_anchor(cycle, anchor, direction, queue)
        else:
            edge = self._placed_cycle_edge(cycle, placed)
            if edge is None:
                # bridged system: keep placed atoms, fit the rest
                anchor = min(placed)
                existing = [self._angle_to(anchor, v) for v in
                            sorted(self.graph.neighbors(anchor))
                            if v in self.pos]
                direction = _gap_fill(existing, 1)[0] if existing else 0.0
                self._polygon_from_anchor(cycle, anchor, direction, queue)
            else:
                self._polygon_from_edge(cycle, edge, queue)

    def _placed_cycle_edge(self, cycle, placed):
        placed_set = set(placed)
        n = len(cycle)
        for k in range(n):
            a, b = cycle[k], cycle[(k + 1) % n]
            if a in placed_set and b in placed_set:
                return (a, b)
        return None

    def _polygon_from_anchor(self, cycle, anchor, direction, queue):
        """Regular polygon with one vertex pinned at `anchor`.

        The polygon center lies along `direction` from the anchor point.
        """
        n = len(cycle)
        radius = self.length / (2.0 * math.sin(math.pi / n))
        ax, ay = self.pos[anchor]
        cx = ax + radius * math.cos(direction)
        cy = ay + radius * math.sin(direction)
        theta0 = math.atan2(ay - cy, ax - cx)
        idx = cycle.index(anchor)
        ordered = cycle[idx:] + cycle[:idx]
        step = 2.0 * math.pi / n
        for k, atom in enumerate(ordered):
            if atom in self.pos:
                continue
            theta = theta0 + k * step
            self.pos[atom] = (cx + radius * math.cos(theta),
                              cy + radius * math.sin(theta))
            self.zig[atom] = -1
            queue.append(atom)

    def _polygon_from_edge(self, cycle, edge, queue):
        """Regular polygon sharing an already-placed edge (ring fusion)."""
        u, v = edge
        n = len(cycle)
        radius = self.length / (2.0 * math.sin(math.pi / n))
        ux, uy = self.pos[u]
        vx, vy = self.pos[v]
        mx, my = (ux + vx) / 2.0, (uy + vy) / 2.0
        ex, ey = vx - ux, vy - uy
        elen = math.hypot(ex, ey)
        apothem = math.sqrt(max(radius * radius - (elen / 2.0) ** 2, 0.0))
        # unit normal to the shared edge; pick the side away from what is
        # already drawn so the new ring folds outward
        nxu, nyu = -ey / elen, ex / elen
        ref = self._occupied_centroid(exclude=(u, v))
        if ref is not None:
            side = (ref[0] - mx) * nxu + (ref[1] - my) * nyu
            if side > 0:
                nxu, nyu = -nxu, -nyu
        cx, cy = mx + apothem * nxu, my + apothem * nyu

        idx = cycle.index(u)
        ordered = cycle[idx:] + cycle[:idx]
        if ordered[1] != v:
            ordered = [ordered[0]] + ordered[1:][::-1]
        theta_u = math.atan2(uy - cy, ux - cx)
        theta_v = math.atan2(vy - cy, vx - cx)
        step = 2.0 * math.pi / n
        forward = (theta_u + step - theta_v) % (2.0 * math.pi)
        if min(forward, 2.0 * math.pi - forward) > 1e-6:
            step = -step
        for k, atom in enumerate(ordered):
            if atom in self.pos:
                continue
            theta = theta_u + k * step
            self.pos[atom] = (cx + radius * math.cos(theta),
                              cy + radius * math.sin(theta))
            self.zig[atom] = -1
            queue.append(atom)

    def _occupied_centroid(self, exclude):
        pts = [p for a, p in self.pos.items() if a not in exclude]
        if not pts:
            return None
        return (sum(p[0] for p in pts) / len(pts),
                sum(p[1] for p in pts) / len(pts))


def _order_cycle(graph, nodes) -> list[int]:
    """Arrange a cycle-basis node set into traversal order.

    minimum_cycle_basis returns unordered node lists; the drawing code
    needs consecutive vertices adjacent.
    """
    node_set = set(nodes)
    start = min(nodes)
    order = [start]
    seen = {start}

    def walk():
        current = order[-1]
        if len(order) == len(node_set):
            return graph.has_edge(current, start)
        for nxt in sorted(graph.neighbors(current)):
            if nxt in node_set and nxt not in seen:
                order.append(nxt)
                seen.add(nxt)
                if walk():
                    return True
                order.pop()
                seen.discard(nxt)
        return False

    if not walk():
        # no Hamiltonian traversal (pathological basis set): fall back to
        # sorted order, downstream perturbation handles the geometry
        return sorted(node_set)
    return order


def _gap_fill(existing: list[float], count: int) -> list[float]:
    """Angles that split the widest free arc around an atom evenly."""
    if not existing:
        return [2.0 * math.pi * j / count for j in range(count)]
    angles = sorted(a % (2.0 * math.pi) for a in existing)
    best_start, best_width = angles[-1], 0.0
    for k in range(len(angles)):
        nxt = angles[(k + 1) % len(angles)]
        width = (nxt - angles[k]) % (2.0 * math.pi)
        if k + 1 == len(angles) and len(angles) == 1:
            width = 2.0 * math.pi
        if width > best_width:
            best_width = width
            best_start = angles[k]
    return [best_start + best_width * j / (count + 1)
            for j in range(1, count + 1)]

"""Panel Nystrom discretization of the obstacle boundary.

Each patch of a shape is split into quadrilateral panels in parameter space,
carrying a tensor Gauss-Legendre rule.  Layer potentials use the plain panel
rule for far targets, adaptive quadtree subdivision for near targets and a
polar rule around the target's own parameter point for on-panel targets.
The corrected weights are always expressed against the panel's nodal values
through Lagrange interpolation, so every operator stays a plain matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial import cKDTree

from .specialfn import FOUR_PI

NEAR_FACTOR = 2.0     # targets closer than this many panel sizes get special quadrature
SUBDIV_RATIO = 1.0    # accept a sub-box when dist > ratio * size
MAX_SUBDIV = 14
CHUNK = 4000


class NearSingularWarning(UserWarning):
    """An off-surface target sits closer than a tenth of the local mesh width."""


def _lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values of the Lagrange basis on ``nodes`` at points ``x``; shape (len(x), len(nodes))."""
    diff = x[:, None] - nodes[None, :]
    p = len(nodes)
    out = np.ones((len(x), p))
    for j in range(p):
        for m in range(p):
            if m != j:
                out[:, j] *= diff[:, m] / (nodes[j] - nodes[m])
    return out


@dataclass
class BoundaryGrid:
    patches: list
    panel_patch: np.ndarray   # (P,)
    panel_box: np.ndarray     # (P, 4) a0, a1, b0, b1
    panel_center: np.ndarray  # (P, 3)
    panel_size: np.ndarray    # (P,)
    order: int
    nodes: np.ndarray         # (N, 3)
    normals: np.ndarray       # (N, 3) outward from the obstacle
    weights: np.ndarray       # (N,)
    jac: np.ndarray           # (N,)
    node_param: np.ndarray    # (N, 2)
    node_panel: np.ndarray    # (N,)
    labels: np.ndarray        # (N,) face labels from the boundary partition

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_panels(self):
        return len(self.panel_patch)

    @property
    def area(self):
        return float(self.weights.sum())

    def panel_nodes(self, k):
        p2 = self.order**2
        return np.arange(k * p2, (k + 1) * p2)

    def local_width(self):
        """Mesh width attached to each node (its panel size over the order)."""
        return self.panel_size[self.node_panel] / self.order


def _box_geometry(patch, boxes):
    """3D centre and diameter estimate of parameter boxes on one patch."""
    a0, a1, b0, b1 = boxes.T
    am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
    pa = np.stack([a0, a1, a0, a1, am, a0, a1, am, am], axis=1)
    pb = np.stack([b0, b0, b1, b1, bm, bm, bm, b0, b1], axis=1)
    pts = patch(pa, pb)
    center = pts[:, 4]
    size = np.maximum(np.linalg.norm(pts[:, 0] - pts[:, 3], axis=1), np.linalg.norm(pts[:, 1] - pts[:, 2], axis=1))
    size = np.maximum(size, 2 * np.max(np.linalg.norm(pts - center[:, None], axis=2), axis=1))
    return center, size


def build_boundary_grid(shape, panels_per_edge: int = 2, order: int = 6, refine_point=None,
                        refine_gamma: float = 2.0, refine_min: float = 0.05, max_level: int = 10,
                        contacts=()) -> BoundaryGrid:
    """Mesh ``shape`` with panels; optionally grade panels toward ``refine_point``."""
    patches = shape.patches()
    m = panels_per_edge
    edges = np.linspace(-1, 1, m + 1)
    boxes, owner = [], []
    for pi in range(len(patches)):
        for i in range(m):
            for j in range(m):
                boxes.append((edges[i], edges[i + 1], edges[j], edges[j + 1]))
                owner.append(pi)
    boxes = np.array(boxes)
    owner = np.array(owner)
    if refine_point is not None:
        x0 = np.asarray(refine_point, float)
        for _ in range(max_level):
            split = np.zeros(len(boxes), bool)
            for pi, patch in enumerate(patches):
                sel = np.nonzero(owner == pi)[0]
                c, s = _box_geometry(patch, boxes[sel])
                dist = np.maximum(np.linalg.norm(c - x0, axis=1) - 0.5 * s, 0.0)
                split[sel] = s > refine_gamma * np.maximum(dist, refine_min)
            if not np.any(split):
                break
            keep_b, keep_o = [boxes[~split]], [owner[~split]]
            for (a0, a1, b0, b1), o in zip(boxes[split], owner[split]):
                am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
                keep_b.append(np.array([(a0, am, b0, bm), (am, a1, b0, bm), (a0, am, bm, b1), (am, a1, bm, b1)]))
                keep_o.append(np.full(4, o))
            boxes, owner = np.vstack(keep_b), np.concatenate(keep_o)
            order_idx = np.lexsort((boxes[:, 2], boxes[:, 0], owner))
            boxes, owner = boxes[order_idx], owner[order_idx]

    g, w = leggauss(order)
    P = len(boxes)
    nodes = np.empty((P, order * order, 3))
    normals = np.empty_like(nodes)
    jac = np.empty((P, order * order))
    params = np.empty((P, order * order, 2))
    wts = np.empty((P, order * order))
    centers = np.empty((P, 3))
    sizes = np.empty(P)
    GA, GB = np.meshgrid(g, g, indexing="ij")
    WW = np.outer(w, w).ravel()
    for pi, patch in enumerate(patches):
        sel = np.nonzero(owner == pi)[0]
        if len(sel) == 0:
            continue
        bx = boxes[sel]
        ha, hb = 0.5 * (bx[:, 1] - bx[:, 0]), 0.5 * (bx[:, 3] - bx[:, 2])
        A = 0.5 * (bx[:, 0] + bx[:, 1])[:, None] + ha[:, None] * GA.ravel()[None]
        B = 0.5 * (bx[:, 2] + bx[:, 3])[:, None] + hb[:, None] * GB.ravel()[None]
        x, xa, xb = patch.eval(A, B)
        nn = np.cross(xa, xb)
        J = np.linalg.norm(nn, axis=-1)
        nodes[sel] = x
        normals[sel] = nn / J[..., None]
        jac[sel] = J
        params[sel, :, 0], params[sel, :, 1] = A, B
        wts[sel] = J * WW[None] * (ha * hb)[:, None]
        centers[sel], sizes[sel] = _box_geometry(patch, bx)
    nodes = nodes.reshape(-1, 3)
    labels = np.full(len(nodes), "obstacle_exterior", dtype=object)
    flat = np.repeat(np.array([patches[o].label == "flat" for o in owner]), order * order)
    for c in contacts:
        labels[flat & c.in_disc(nodes, 1e-9)] = "contact"
    return BoundaryGrid(patches, owner, boxes, centers, sizes, order, nodes, normals.reshape(-1, 3),
                        wts.ravel(), jac.ravel(), params.reshape(-1, 2), np.repeat(np.arange(P), order * order),
                        labels.astype(str))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def _kernels(x, y, ny, k, want_sl=True, want_dl=True):
    """Phi(x, y) and d Phi / d n(y) for broadcastable arrays."""
    d = y - x
    r = np.linalg.norm(d, axis=-1)
    e = np.exp(1j * k * r) / (FOUR_PI * r)
    sl = e if want_sl else None
    dl = e * (1j * k * r - 1.0) / (r * r) * np.sum(d * ny, axis=-1) if want_dl else None
    return sl, dl


# ---------------------------------------------------------------------------
# Special quadrature: returns weights against panel nodes
# ---------------------------------------------------------------------------

def _accumulate(grid, patch, panel_ids, tgt, a, b, pw, k, n_pairs_out, pair_ids, out_sl, out_dl):
    """Add sum_s K(tgt, y(a_s, b_s)) J_s pw_s L(a_s, b_s) into the (pair, p^2) arrays."""
    p = grid.order
    g, _ = leggauss(p)
    for s in range(0, len(pair_ids), CHUNK):
        sl_ = slice(s, s + CHUNK)
        ai, bi, wi = a[sl_], b[sl_], pw[sl_]
        pid = panel_ids[sl_]
        y, ya, yb = patch.eval(ai, bi)
        nn = np.cross(ya, yb)
        J = np.linalg.norm(nn, axis=-1)
        ny = nn / J[..., None]
        S, D = _kernels(tgt[sl_][:, None, :], y, ny, k)
        w = J * wi
        box = grid.panel_box[pid]
        ua = (ai - 0.5 * (box[:, :1] + box[:, 1:2])) / (0.5 * (box[:, 1:2] - box[:, :1]))
        ub = (bi - 0.5 * (box[:, 2:3] + box[:, 3:4])) / (0.5 * (box[:, 3:4] - box[:, 2:3]))
        C, Q = ai.shape
        La = _lagrange_matrix(g, ua.ravel()).reshape(C, Q, p)
        Lb = _lagrange_matrix(g, ub.ravel()).reshape(C, Q, p)
        ws = np.einsum("cq,cqi,cqj->cij", S * w, La, Lb).reshape(C, p * p)
        wd = np.einsum("cq,cqi,cqj->cij", D * w, La, Lb).reshape(C, p * p)
        np.add.at(out_sl, pair_ids[sl_], ws)
        np.add.at(out_dl, pair_ids[sl_], wd)


def _adaptive_boxes(patch, boxes, tgt, ratio=SUBDIV_RATIO, max_level=MAX_SUBDIV):
    """Quadtree-split (pair, box) items until each box is far enough from its target."""
    items = np.arange(len(boxes))
    cur = boxes.copy()
    done_items, done_boxes = [], []
    for level in range(max_level + 1):
        c, s = _box_geometry(patch, cur)
        dist = np.linalg.norm(c - tgt[items], axis=1)
        ok = (dist > ratio * s) | (level == max_level)
        done_items.append(items[ok])
        done_boxes.append(cur[ok])
        cur, items = cur[~ok], items[~ok]
        if len(cur) == 0:
            break
        a0, a1, b0, b1 = cur.T
        am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
        cur = np.concatenate([np.stack(v, axis=1) for v in
                              ((a0, am, b0, bm), (am, a1, b0, bm), (a0, am, bm, b1), (am, a1, bm, b1))])
        items = np.tile(items, 4)
    return np.concatenate(done_items), np.concatenate(done_boxes)


def _near_weights(grid, targets, pair_t, pair_p, k):
    """Adaptive-quadrature weights for (target, panel) pairs; returns (pairs, p^2) for SL and DL."""
    p = grid.order
    out_sl = np.zeros((len(pair_t), p * p), complex)
    out_dl = np.zeros_like(out_sl)
    g, w = leggauss(p)
    GA, GB = np.meshgrid(g, g, indexing="ij")
    WW = np.outer(w, w).ravel()
    for pi, patch in enumerate(grid.patches):
        sel = np.nonzero(grid.panel_patch[pair_p] == pi)[0]
        if len(sel) == 0:
            continue
        it, bx = _adaptive_boxes(patch, grid.panel_box[pair_p[sel]], targets[pair_t[sel]])
        ha, hb = 0.5 * (bx[:, 1] - bx[:, 0]), 0.5 * (bx[:, 3] - bx[:, 2])
        A = 0.5 * (bx[:, 0] + bx[:, 1])[:, None] + ha[:, None] * GA.ravel()[None]
        B = 0.5 * (bx[:, 2] + bx[:, 3])[:, None] + hb[:, None] * GB.ravel()[None]
        pw = WW[None] * (ha * hb)[:, None]
        pairs = sel[it]
        _accumulate(grid, patch, pair_p[pairs], targets[pair_t[pairs]], A, B, pw, k, len(pair_t), pairs,
                    out_sl, out_dl)
    return out_sl, out_dl


def _polar_rule(box, apex, nr, ns):
    """Polar-type rule on a parameter box around an interior apex (8 right triangles, sinh map)."""
    a0, a1, b0, b1 = box
    corners = [(a0, b0), (a1, b0), (a1, b1), (a0, b1)]
    gr, wr = leggauss(nr)
    gr, wr = 0.5 * (gr + 1), 0.5 * wr
    gs, ws = leggauss(ns)
    gs, ws = 0.5 * (gs + 1), 0.5 * ws
    P = np.array(apex, float)
    pts, wts = [], []
    for e in range(4):
        c0, c1 = np.array(corners[e]), np.array(corners[(e + 1) % 4])
        ed = c1 - c0
        L = np.linalg.norm(ed)
        t = ed / L
        foot_s = np.clip((P - c0) @ t, 0.0, L)
        F = c0 + foot_s * t
        delta = np.linalg.norm(P - F)
        if delta < 1e-14:
            continue
        for sgn, length in ((-1.0, foot_s), (1.0, L - foot_s)):
            if length <= 1e-14:
                continue
            smax = np.arcsinh(length / delta)
            sig = gs * smax
            xs = delta * np.sinh(sig)            # offset from foot along edge
            dx = delta * np.cosh(sig) * smax * ws
            U, X = np.meshgrid(gr, xs, indexing="ij")
            WU, DX = np.meshgrid(wr, dx, indexing="ij")
            Q = P + U[..., None] * ((F - P) + sgn * X[..., None] * t)
            pts.append(Q.reshape(-1, 2))
            wts.append((U * delta * WU * DX).ravel())
    return np.concatenate(pts), np.concatenate(wts)


def _self_weights(grid, k, nr=None, ns=None):
    """On-panel singular weights for every node; returns (N, p^2) SL and DL arrays."""
    p = grid.order
    nr = nr or p + 4
    ns = ns or p + 4
    N = grid.n_nodes
    g, _ = leggauss(p)
    # the rule depends only on the node's position within the reference square
    ref_pts, ref_w = [], []
    for i in range(p):
        for j in range(p):
            q, w = _polar_rule((-1.0, 1.0, -1.0, 1.0), (g[i], g[j]), nr, ns)
            ref_pts.append(q)
            ref_w.append(w)
    Qn = len(ref_w[0])
    ref_pts = np.array(ref_pts)  # (p^2, Q, 2)
    ref_w = np.array(ref_w)
    out_sl = np.zeros((N, p * p), complex)
    out_dl = np.zeros_like(out_sl)
    loc = np.tile(np.arange(p * p), grid.n_panels)
    for pi, patch in enumerate(grid.patches):
        tg = np.nonzero(grid.panel_patch[grid.node_panel] == pi)[0]
        if len(tg) == 0:
            continue
        pan = grid.node_panel[tg]
        box = grid.panel_box[pan]
        ha, hb = 0.5 * (box[:, 1] - box[:, 0]), 0.5 * (box[:, 3] - box[:, 2])
        rp = ref_pts[loc[tg]]
        A = 0.5 * (box[:, 0] + box[:, 1])[:, None] + ha[:, None] * rp[..., 0]
        B = 0.5 * (box[:, 2] + box[:, 3])[:, None] + hb[:, None] * rp[..., 1]
        pw = ref_w[loc[tg]] * (ha * hb)[:, None]
        assert A.shape[1] == Qn
        _accumulate(grid, patch, pan, grid.nodes[tg], A, B, pw, k, N, tg, out_sl, out_dl)
    return out_sl, out_dl


def _near_pairs(grid, targets, exclude_own=None, factor=NEAR_FACTOR):
    """(target, panel) pairs with the target within ``factor`` panel sizes of the panel centre."""
    tree = cKDTree(targets)
    pt, pp = [], []
    for j in range(grid.n_panels):
        idx = tree.query_ball_point(grid.panel_center[j], factor * grid.panel_size[j])
        if not idx:
            continue
        idx = np.asarray(idx)
        if exclude_own is not None:
            idx = idx[exclude_own[idx] != j]
        pt.append(idx)
        pp.append(np.full(len(idx), j))
    if not pt:
        return np.zeros(0, int), np.zeros(0, int)
    return np.concatenate(pt), np.concatenate(pp)


# ---------------------------------------------------------------------------
# Public operators
# ---------------------------------------------------------------------------

@dataclass
class LayerMatrices:
    """On-surface SL and principal-value DL matrices (target node x source node)."""
    S: np.ndarray
    K: np.ndarray


def assemble_layer_matrices(grid: BoundaryGrid, k: float) -> LayerMatrices:
    X = grid.nodes
    N = len(X)
    S = np.empty((N, N), complex)
    Kd = np.empty((N, N), complex)
    step = max(1, 2_000_000 // max(N, 1))
    for s in range(0, N, step):
        x = X[s:s + step, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            sl, dl = _kernels(x, X[None], grid.normals[None], k)
        S[s:s + step] = sl * grid.weights
        Kd[s:s + step] = dl * grid.weights
    p2 = grid.order**2
    pt, pp = _near_pairs(grid, X, exclude_own=grid.node_panel)
    ws, wd = _near_weights(grid, X, pt, pp, k)
    cols = pp[:, None] * p2 + np.arange(p2)[None]
    S[pt[:, None], cols] = ws
    Kd[pt[:, None], cols] = wd
    ws, wd = _self_weights(grid, k)
    cols = grid.node_panel[:, None] * p2 + np.arange(p2)[None]
    rows = np.arange(N)[:, None]
    S[rows, cols] = ws
    Kd[rows, cols] = wd
    return LayerMatrices(S, Kd)


def layer_evaluation_matrices(grid: BoundaryGrid, targets, k: float, warn: bool = True):
    """Dense SL and DL matrices from boundary nodes to off-surface targets, with near correction."""
    T = np.atleast_2d(np.asarray(targets, float))
    p2 = grid.order**2
    nT = len(T)
    S = np.empty((nT, grid.n_nodes), complex)
    D = np.empty_like(S)
    step = max(1, 2_000_000 // max(grid.n_nodes, 1))
    for s in range(0, nT, step):
        with np.errstate(divide="ignore", invalid="ignore"):
            sl, dl = _kernels(T[s:s + step, None, :], grid.nodes[None], grid.normals[None], k)
        S[s:s + step] = sl * grid.weights
        D[s:s + step] = dl * grid.weights
    if warn and nT:
        dist, idx = cKDTree(grid.nodes).query(T)
        close = dist < 0.1 * grid.local_width()[idx]
        if np.any(close):
            warnings.warn(f"{int(close.sum())} target(s) within 0.1 mesh widths of the surface",
                          NearSingularWarning, stacklevel=2)
    pt, pp = _near_pairs(grid, T)
    if len(pt):
        ws, wd = _near_weights(grid, T, pt, pp, k)
        cols = pp[:, None] * p2 + np.arange(p2)[None]
        S[pt[:, None], cols] = ws
        D[pt[:, None], cols] = wd
    return S, D


def apply_layer_potential(kind: str, grid: BoundaryGrid, density, targets, k: float, on_surface: bool = False):
    """SL or DL applied to ``density``; ``on_surface`` targets must be the grid nodes (principal value)."""
    density = np.asarray(density, complex)
    if kind not in ("SL", "DL"):
        raise ValueError(f"unknown layer kind {kind!r}")
    if on_surface:
        M = assemble_layer_matrices(grid, k)
        return (M.S if kind == "SL" else M.K) @ density
    S, D = layer_evaluation_matrices(grid, targets, k)
    return (S if kind == "SL" else D) @ density


def layer_far_field(grid: BoundaryGrid, directions, k: float):
    """Far-field kernels of SL and DL: rows over directions, columns over nodes."""
    xh = np.atleast_2d(directions)
    e = np.exp(-1j * k * xh @ grid.nodes.T) / FOUR_PI
    return e * grid.weights, -1j * k * (xh @ grid.normals.T) * e * grid.weights

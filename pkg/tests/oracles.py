"""Brute-force references kept deliberately naive and independent of the
library's kernels."""
from collections import deque
from itertools import combinations

import networkx as nx
import numpy as np


def nx_graph(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.explicit_edges())
    return G


def bfs_table(g):
    G = nx_graph(g)
    D = np.full((g.n, g.n), -1, dtype=np.int64)
    for s, row in nx.all_pairs_shortest_path_length(G):
        for t, d in row.items():
            D[s, t] = d
    return D


def bfs_dist(n, adj, s):
    out = [-1] * n
    out[s] = 0
    q = deque([s])
    while q:
        u = q.popleft()
        for w in adj[u]:
            if out[w] < 0:
                out[w] = out[u] + 1
                q.append(w)
    return out


def four_point_delta(D):
    """max over quadruples of (largest - middle pair sum) / 2."""
    n = len(D)
    best = 0
    for x, y, z, w in combinations(range(n), 4):
        s = sorted([D[x][y] + D[z][w], D[x][z] + D[y][w], D[x][w] + D[y][z]])
        best = max(best, s[2] - s[1])
    return best / 2


def projection(D, Y, x):
    m = min(D[x][y] for y in Y)
    return sorted(y for y in Y if D[x][y] == m)


def hausdorff(D, A, B):
    return max(max(min(D[a][b] for b in B) for a in A), max(min(D[a][b] for a in A) for b in B))


def on_geodesic(D, a, b, v):
    return D[a][v] + D[v][b] == D[a][b]

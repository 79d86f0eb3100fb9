"""Maximum bipartite matching by augmenting paths (Kuhn's algorithm).

Used by the genie-aided fixed baseline to assign undelivered packets to
subcarriers. Left side: packets (at most N of them); right side: subcarriers.
Small enough that the O(V*E) augmenting-path scan is exact and instant.
"""

from __future__ import annotations


def max_bipartite_matching(adjacency, n_right: int):
    """Maximum matching for left vertices with the given adjacency lists.

    adjacency: sequence over left vertices of iterables of right-vertex ids.
    Returns (match_left, size): match_left[u] is the right vertex matched to
    left vertex u, or -1 if u is unmatched.
    """
    n_left = len(adjacency)
    match_right = [-1] * n_right

    def try_augment(u, seen):
        for v in adjacency[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] < 0 or try_augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    size = 0
    for u in range(n_left):
        if try_augment(u, [False] * n_right):
            size += 1
    match_left = [-1] * n_left
    for v, u in enumerate(match_right):
        if u >= 0:
            match_left[u] = v
    return match_left, size

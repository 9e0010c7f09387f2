"""Max-heap over node keys with lazy invalidation.

Updating a key pushes a fresh entry and bumps the node's version; stale
entries are discarded when they surface. Ties on the key resolve to the
lowest node id because entries compare as ``(-key, node, version)``.
"""

from __future__ import annotations

import heapq

import numpy as np


class LazyMaxHeap:
    def __init__(self, keys):
        keys = np.asarray(keys, dtype=float)
        self.n = len(keys)
        self._version = [0] * self.n
        self._keys = keys.tolist()
        self._entries = [(-k, i, 0) for i, k in enumerate(self._keys)]
        heapq.heapify(self._entries)

    def __len__(self) -> int:
        return self.n

    def key(self, node: int) -> float:
        return self._keys[node]

    def update(self, node: int, key: float) -> None:
        key = float(key)
        if key == self._keys[node]:
            return
        v = self._version[node] + 1
        self._version[node] = v
        self._keys[node] = key
        heapq.heappush(self._entries, (-key, node, v))
        if len(self._entries) > 4 * self.n + 64:
            self._rebuild()

    def update_many(self, nodes, keys) -> None:
        own, version, entries, push = self._keys, self._version, self._entries, heapq.heappush
        for node, key in zip(nodes, keys):
            if key != own[node]:
                v = version[node] + 1
                version[node] = v
                own[node] = key
                push(entries, (-key, node, v))
        if len(entries) > 4 * self.n + 64:
            self._rebuild()

    def _rebuild(self) -> None:
        self._entries = [(-k, i, self._version[i]) for i, k in enumerate(self._keys)]
        heapq.heapify(self._entries)

    def top(self) -> tuple[int, float]:
        """Return ``(node, key)`` with the largest key (lowest node on ties)."""
        entries = self._entries
        while True:
            negkey, node, v = entries[0]
            if v == self._version[node]:
                return node, -negkey
            heapq.heappop(entries)

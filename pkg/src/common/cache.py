# // Copyright (c) 2025 Bytedance Ltd. and/or its affiliates
# //
# // Licensed under the Apache License, Version 2.0 (the "License");
# // you may not use this file except in compliance with the License.
# // You may obtain a copy of the License at
# //
# //     http://www.apache.org/licenses/LICENSE-2.0
# //
# // Unless required by applicable law or agreed to in writing, software
# // distributed under the License is distributed on an "AS IS" BASIS,
# // WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# // See the License for the specific language governing permissions and
# // limitations under the License.

import threading
from typing import Any, Callable


class Cache:
    """
    Memo cache for per-domain artefacts that are costly to rebuild
    (anchor points, seed clouds for closest-point solves, validated gauges).

    Keys are namespaced by domain spec hash so two domains never share entries.
    """

    def __init__(self, disable=False, prefix="", cache=None, lock=None):
        self.cache = cache if cache is not None else {}
        self.disable = disable
        self.prefix = prefix
        self.lock = lock if lock is not None else threading.RLock()

    def __call__(self, key: str, fn: Callable[[], Any]):
        if self.disable:
            return fn()

        key = self.prefix + key
        with self.lock:
            try:
                return self.cache[key]
            except KeyError:
                pass
        result = fn()
        with self.lock:
            return self.cache.setdefault(key, result)

    def namespace(self, namespace: str) -> "Cache":
        return Cache(
            disable=self.disable,
            prefix=self.prefix + namespace + ".",
            cache=self.cache,
            lock=self.lock,
        )

    def get(self, key: str):
        key = self.prefix + key
        return self.cache[key]

    def clear(self) -> None:
        with self.lock:
            for key in [k for k in self.cache if k.startswith(self.prefix)]:
                del self.cache[key]


# Process-wide geometry cache
GEOMETRY_CACHE = Cache()

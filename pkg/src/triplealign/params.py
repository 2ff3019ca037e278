"""Named trainable parameters with declared shapes and seeded init.

The store draws from one torch.Generator in registration order, so a fixed
registration sequence plus a seed gives bit-identical initial values.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np
import torch


class ParameterStore:
    def __init__(self, seed: int, dtype: torch.dtype = torch.float32, device: str = "cpu"):
        self._params: "OrderedDict[str, torch.nn.Parameter]" = OrderedDict()
        self._gen = torch.Generator(device="cpu").manual_seed(int(seed))
        self.dtype = dtype
        self.device = device

    def _uniform(self, shape: tuple[int, ...], bound: float) -> torch.Tensor:
        t = torch.empty(shape, dtype=self.dtype)
        t.uniform_(-bound, bound, generator=self._gen)
        return t.to(self.device)

    def register_weight(self, name: str, shape: tuple[int, int]) -> torch.nn.Parameter:
        bound = float(np.sqrt(6.0 / (shape[0] + shape[1])))
        return self._add(name, self._uniform(shape, bound))

    def register_attention(self, name: str, dim: int) -> torch.nn.Parameter:
        bound = float(np.sqrt(6.0 / (dim + 1)))
        return self._add(name, self._uniform((dim,), bound))

    def register_bias(self, name: str, dim: int, fill: float = 0.0) -> torch.nn.Parameter:
        return self._add(name, torch.full((dim,), float(fill), dtype=self.dtype,
                                          device=self.device))

    def register_tensor(self, name: str, values: torch.Tensor) -> torch.nn.Parameter:
        return self._add(name, values.to(dtype=self.dtype, device=self.device).clone())

    def _add(self, name: str, values: torch.Tensor) -> torch.nn.Parameter:
        if name in self._params:
            raise KeyError(f"parameter {name!r} already registered")
        p = torch.nn.Parameter(values)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> torch.nn.Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def parameters(self) -> list[torch.nn.Parameter]:
        return list(self._params.values())

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: tuple(v.shape) for k, v in self._params.items()}

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.detach().cpu().numpy().copy() for k, v in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ValueError(f"parameter set mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        with torch.no_grad():
            for name, param in self._params.items():
                arr = np.asarray(arrays[name])
                if tuple(arr.shape) != tuple(param.shape):
                    raise ValueError(
                        f"parameter {name!r}: checkpoint shape {arr.shape} != model shape {tuple(param.shape)}")
                param.copy_(torch.from_numpy(arr).to(dtype=param.dtype, device=param.device))

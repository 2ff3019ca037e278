"""Segmented reductions over grouped rows (torch, autograd-compatible)."""

import torch


def segment_sum(values: torch.Tensor, seg: torch.Tensor, n_seg: int) -> torch.Tensor:
    out = torch.zeros((n_seg,) + values.shape[1:], dtype=values.dtype, device=values.device)
    out.index_add_(0, seg, values)
    return out


def segment_mean(values: torch.Tensor, seg: torch.Tensor, n_seg: int) -> torch.Tensor:
    total = segment_sum(values, seg, n_seg)
    count = torch.zeros(n_seg, dtype=values.dtype, device=values.device)
    count.index_add_(0, seg, torch.ones_like(seg, dtype=values.dtype))
    count = count.clamp(min=1.0)
    return total / count.reshape((n_seg,) + (1,) * (values.dim() - 1))


def segment_softmax(scores: torch.Tensor, seg: torch.Tensor, n_seg: int) -> torch.Tensor:
    """Softmax of a 1-d score vector within each segment.

    The per-segment max is subtracted (detached) for stability; empty
    segments produce no rows, so they need no special case.
    """
    seg_max = torch.full((n_seg,), float("-inf"), dtype=scores.dtype, device=scores.device)
    seg_max.scatter_reduce_(0, seg, scores.detach(), reduce="amax", include_self=True)
    z = torch.exp(scores - seg_max[seg])
    denom = segment_sum(z, seg, n_seg)
    return z / denom[seg]

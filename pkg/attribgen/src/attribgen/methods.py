"""Attribution methods: tensors in, (H, W) float64 relevance maps out.

Gradient methods differentiate the raw class score (the logit); LIME fits
its surrogate to softmax probabilities, matching each method's original
formulation. All computation runs in float64. Maps keep their sign;
evidence filtering is the consumer's decision.
"""

import copy

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .errors import ConfigError, DataError, ModelError
from .modelio import find_conv_layer, is_scripted

# fixed so chunking never changes RNG draw order or results
_CHUNK = 16


def to_input(raster) -> torch.Tensor:
    """(H, W, C) raster to a (1, C, H, W) float64 tensor."""
    arr = np.asarray(raster, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise DataError(f"raster must be (H, W, 1|3), got {arr.shape}")
    return torch.from_numpy(arr.copy()).permute(2, 0, 1).unsqueeze(0)


def _forward(model, batch: torch.Tensor) -> torch.Tensor:
    out = model(batch)
    if out.ndim != 2 or out.shape[0] != batch.shape[0] or out.shape[1] < 1:
        raise ModelError(
            f"model must map (N, C, H, W) to (N, classes), got "
            f"{tuple(out.shape)} for batch {tuple(batch.shape)}"
        )
    return out


def _check_target(out: torch.Tensor, target: int) -> None:
    k = out.shape[1]
    if not 0 <= target < k:
        raise DataError(f"target class {target} outside 0..{k - 1}")


def predict_probs(model, raster) -> np.ndarray:
    """Softmax class probabilities for one raster."""
    with torch.no_grad():
        out = _forward(model, to_input(raster))
    return torch.softmax(out, dim=1)[0].numpy()


def _input_grads(model, batch: torch.Tensor, target: int) -> torch.Tensor:
    """d score_target / d input, per sample, shape like ``batch``."""
    batch = batch.detach().requires_grad_(True)
    out = _forward(model, batch)
    _check_target(out, target)
    (grad,) = torch.autograd.grad(out[:, target].sum(), batch)
    return grad


def saliency(model, raster, target: int) -> np.ndarray:
    """Per-pixel max over channels of the absolute input gradient."""
    g = _input_grads(model, to_input(raster), target)[0]
    return g.abs().amax(dim=0).numpy()


def integrated_gradients(model, raster, target: int, *, steps: int = 64,
                         baseline=None) -> np.ndarray:
    """Path-integrated gradients from a baseline, channel-summed.

    Gradients are averaged at the midpoints of ``steps`` equal path
    segments, so the linear case is exact at any step count.
    """
    if steps < 8:
        raise ConfigError(f"steps must be >= 8, got {steps}")
    x = to_input(raster)
    b = torch.zeros_like(x) if baseline is None else to_input(baseline)
    if b.shape != x.shape:
        raise DataError(
            f"baseline shape {tuple(b.shape[1:])} does not match image "
            f"{tuple(x.shape[1:])}"
        )
    diff = x - b
    mids = (torch.arange(steps, dtype=torch.float64) + 0.5) / steps
    total = torch.zeros_like(x[0])
    for start in range(0, steps, _CHUNK):
        part = mids[start:start + _CHUNK]
        points = b + part.view(-1, 1, 1, 1) * diff
        total += _input_grads(model, points, target).sum(dim=0)
    attr = diff[0] * (total / steps)
    return attr.sum(dim=0).numpy()


def smoothgrad(model, raster, target: int, *, samples: int = 50,
               sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Mean saliency over Gaussian-perturbed copies; seeded."""
    if samples < 1:
        raise ConfigError(f"samples must be >= 1, got {samples}")
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        # every perturbed copy is the input itself; mean == plain saliency
        return saliency(model, raster, target)
    x = to_input(raster)
    gen = torch.Generator().manual_seed(int(seed))
    acc = torch.zeros(x.shape[2], x.shape[3], dtype=torch.float64)
    done = 0
    while done < samples:
        k = min(_CHUNK, samples - done)
        noise = torch.randn((k,) + x.shape[1:], generator=gen,
                            dtype=torch.float64) * sigma
        g = _input_grads(model, x + noise, target)
        acc += g.abs().amax(dim=1).sum(dim=0)
        done += k
    return (acc / samples).numpy()


class _GuidedReLUFn(torch.autograd.Function):
    @staticmethod
    def forward(ctx, inp):
        ctx.save_for_backward(inp)
        return inp.clamp(min=0.0)

    @staticmethod
    def backward(ctx, grad_out):
        (inp,) = ctx.saved_tensors
        return grad_out.clamp(min=0.0) * (inp > 0)


class _GuidedReLU(nn.Module):
    def forward(self, x):  # noqa: D102 - trivial wrapper
        return _GuidedReLUFn.apply(x)


def _swap_relus(module: nn.Module) -> None:
    for name, child in module.named_children():
        if isinstance(child, nn.ReLU):
            setattr(module, name, _GuidedReLU())
        else:
            _swap_relus(child)


def guided_backprop(model, raster, target: int) -> np.ndarray:
    """Saliency with ReLU backward masked to positive grads at positive
    activations. Only ``nn.ReLU`` modules are patched; a ReLU-free model
    reduces to plain saliency."""
    if is_scripted(model):
        raise ModelError("guided backprop needs an eager model "
                         "(a .py build script), not TorchScript")
    patched = copy.deepcopy(model)
    _swap_relus(patched)
    return saliency(patched, raster, target)


def gradcam(model, raster, target: int, *,
            layer_name: str | None = None) -> np.ndarray:
    """Rectified, gradient-weighted activation of a conv layer, upsampled.

    Defaults to the last Conv2d in module order.
    """
    layer = find_conv_layer(model, layer_name)
    x = to_input(raster).requires_grad_(True)
    captured: list[torch.Tensor] = []
    handle = layer.register_forward_hook(
        lambda mod, inp, out: captured.append(out))
    try:
        out = _forward(model, x)
    finally:
        handle.remove()
    if not captured:
        raise ModelError("the chosen layer never ran during forward")
    act = captured[-1]
    if act.ndim != 4:
        raise ModelError(
            f"hooked layer must produce (N, K, h, w), got {tuple(act.shape)}"
        )
    _check_target(out, target)
    (grad,) = torch.autograd.grad(out[0, target], act)
    weights = grad.mean(dim=(2, 3), keepdim=True)
    cam = torch.relu((weights * act).sum(dim=1, keepdim=True))
    cam = F.interpolate(cam, size=(x.shape[2], x.shape[3]),
                        mode="bilinear", align_corners=False)
    return cam[0, 0].detach().numpy()


def _segment_fill(raster: np.ndarray, labels: np.ndarray, fill) -> np.ndarray:
    if isinstance(fill, (int, float)):
        return np.full_like(raster, float(fill))
    if fill != "mean":
        raise ConfigError(f"fill must be 'mean' or a number, got {fill!r}")
    count = int(labels.max()) + 1
    out = np.empty_like(raster)
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count).astype(np.float64)
    for c in range(raster.shape[2]):
        sums = np.bincount(flat, weights=raster[:, :, c].ravel(),
                           minlength=count)
        out[:, :, c] = (sums / sizes)[labels]
    return out


def lime(model, raster, target: int, labels: np.ndarray, *,
         samples: int = 50, seed: int = 0, fill="mean") -> np.ndarray:
    """Per-segment coefficients of a weighted ridge surrogate.

    Random segment subsets are kept (the rest replaced by ``fill``), the
    model's softmax probability of ``target`` is recorded, and a ridge
    regression from mask vectors to probabilities is fit with an
    exponential kernel on cosine distance from the full image. The
    coefficient of each segment is painted over its pixels.
    """
    x = np.asarray(raster, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] not in (1, 3):
        raise DataError(f"raster must be (H, W, 1|3), got {x.shape}")
    labels = np.asarray(labels)
    if labels.shape != x.shape[:2]:
        raise DataError(
            f"labels {labels.shape} do not match image {x.shape[:2]}"
        )
    count = int(labels.max()) + 1
    if labels.min() < 0 or np.unique(labels).size != count:
        raise DataError("labels must cover 0..L-1 with every label used")
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples}")

    fillimg = _segment_fill(x, labels, fill)
    rng = np.random.default_rng(int(seed))
    masks = rng.integers(0, 2, size=(samples, count)).astype(np.float64)
    masks[0] = 1.0

    scores = np.empty(samples, dtype=np.float64)
    for start in range(0, samples, _CHUNK):
        part = masks[start:start + _CHUNK]
        keep = part[:, labels]  # (k, H, W)
        comps = keep[..., None] * x + (1.0 - keep[..., None]) * fillimg
        batch = torch.from_numpy(comps).permute(0, 3, 1, 2)
        with torch.no_grad():
            out = _forward(model, batch)
        _check_target(out, target)
        scores[start:start + part.shape[0]] = \
            torch.softmax(out, dim=1)[:, target].numpy()

    frac = masks.mean(axis=1)
    dist = 1.0 - np.sqrt(frac)  # cosine distance from the all-ones mask
    kernel = np.sqrt(np.exp(-(dist ** 2) / 0.25 ** 2))
    design = np.concatenate([masks, np.ones((samples, 1))], axis=1)
    sw = np.sqrt(kernel)[:, None]
    a = design * sw
    b = scores * sw[:, 0]
    coef = np.linalg.solve(a.T @ a + np.eye(count + 1), a.T @ b)
    return coef[:count][labels].astype(np.float64)

"""Loading torch models for attribution and serving.

A ``.py`` model file is executed and must define ``build()`` returning an
``nn.Module``; any other extension goes through ``torch.jit.load``. Models
are moved to float64 and eval mode, and their parameters are frozen so
input gradients are the only thing autograd tracks.
"""

import importlib.util
from pathlib import Path

import torch
from torch import nn

from .errors import ModelError


def load_model(path) -> nn.Module:
    path = Path(path)
    if not path.is_file():
        raise ModelError(f"model file not found: {path}")
    if path.suffix == ".py":
        spec = importlib.util.spec_from_file_location(
            f"_attribgen_model_{path.stem}", path)
        module = importlib.util.module_from_spec(spec)
        try:
            spec.loader.exec_module(module)
        except Exception as exc:
            raise ModelError(f"model script {path} failed: {exc}") from None
        build = getattr(module, "build", None)
        if not callable(build):
            raise ModelError(f"model script {path} must define build()")
        model = build()
        if not isinstance(model, nn.Module):
            raise ModelError(
                f"build() in {path} returned {type(model).__name__}, "
                "expected a torch module"
            )
    else:
        try:
            model = torch.jit.load(str(path), map_location="cpu")
        except Exception as exc:
            raise ModelError(f"cannot load model {path}: {exc}") from None
    model = model.double().eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def is_scripted(model) -> bool:
    return isinstance(model, torch.jit.ScriptModule)


def find_conv_layer(model: nn.Module, name: str | None = None) -> nn.Module:
    """Named conv layer, or the last Conv2d in module order."""
    if is_scripted(model):
        raise ModelError(
            "layer lookup needs an eager model (a .py build script), "
            "not TorchScript"
        )
    convs = {n: m for n, m in model.named_modules()
             if isinstance(m, nn.Conv2d)}
    if name is not None:
        if name not in dict(model.named_modules()):
            raise ModelError(
                f"no module named {name!r}; modules: "
                f"{sorted(n for n, _ in model.named_modules() if n)}"
            )
        return dict(model.named_modules())[name]
    if not convs:
        raise ModelError("model has no Conv2d layer to hook")
    return list(convs.values())[-1]

"""Forward-hook activation replacement.

For every hook point named in the interchange records, a forward hook
is registered on the bound submodule. The hook overwrites the output
activation at each listed patch index with that hook's mask token
before downstream layers run, then the model generates text normally.

Activations are expected as [tiles, tokens, dim]; the batch dimension
indexes page tiles row-major (tile_row * tile_cols + tile_col), which
is this adapter's documented broadcast choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .interchange import by_hook
from .manifest import AdapterManifest, HookBinding, ManifestError


class AdapterError(RuntimeError):
    pass


@dataclass
class HookDiagnostics:
    hook_point: str
    replaced_count: int


def mask_token(binding: HookBinding, hook_point: str) -> torch.Tensor:
    """Deterministic small-noise replacement embedding for one hook."""
    gen = torch.Generator().manual_seed(
        int.from_bytes(hook_point.encode(), "little") % (2**31))
    return torch.randn(binding.dims, generator=gen) * binding.sigma


def _replacement_hook(records: list[dict], binding: HookBinding,
                      token: torch.Tensor, tile_cols: int,
                      counter: HookDiagnostics):
    def hook(_module, _inputs, output):
        if not torch.is_tensor(output):
            raise AdapterError(
                f"{counter.hook_point}: hook output is not a tensor")
        if output.dim() != 3:
            raise AdapterError(
                f"{counter.hook_point}: expected [tiles, tokens, dim] "
                f"activations, got shape {tuple(output.shape)}")
        tiles, tokens, dim = output.shape
        if tokens != binding.rows * binding.cols:
            raise AdapterError(
                f"{counter.hook_point}: activation has {tokens} tokens, "
                f"manifest grid is {binding.rows}x{binding.cols}")
        if dim != binding.dims:
            raise AdapterError(
                f"{counter.hook_point}: activation dim {dim} does not "
                f"match mask token dim {binding.dims}")
        out = output.clone()
        for rec in records:
            tile_idx = rec["tile_row"] * tile_cols + rec["tile_col"]
            if tile_idx >= tiles:
                raise AdapterError(
                    f"{counter.hook_point}: record tile ({rec['tile_row']},"
                    f"{rec['tile_col']}) beyond batch of {tiles} tiles")
            flat = rec["row"] * binding.cols + rec["col"]
            out[tile_idx, flat, :] = token.to(out.dtype)
            counter.replaced_count += 1
        return out
    return hook


def apply_and_run(model, image, records: list[dict],
                  manifest: AdapterManifest
                  ) -> tuple[str, list[HookDiagnostics]]:
    """Run the model on an image with mask replacements active.

    Returns the generated text and per-hook replacement diagnostics.
    Hooks are always removed afterwards, even on failure.
    """
    grouped = by_hook(records)
    handles = []
    diagnostics = []
    try:
        for hook_point in sorted(grouped):
            binding = manifest.binding(hook_point)
            try:
                module = model.get_submodule(binding.module_path)
            except AttributeError as exc:
                raise ManifestError(
                    f"model has no submodule {binding.module_path!r} "
                    f"for hook point {hook_point!r}") from exc
            counter = HookDiagnostics(hook_point, 0)
            diagnostics.append(counter)
            token = mask_token(binding, hook_point)
            handles.append(module.register_forward_hook(
                _replacement_hook(grouped[hook_point], binding, token,
                                  manifest.tile_cols, counter)))
        with torch.no_grad():
            text = model.generate(image)
    finally:
        for h in handles:
            h.remove()
    if not isinstance(text, str):
        raise AdapterError("model.generate must return text")
    return text, diagnostics


def load_model(manifest: AdapterManifest):
    """Instantiate the model from the manifest's factory string."""
    import importlib
    if ":" not in manifest.model:
        raise ManifestError(
            f"model spec {manifest.model!r} is not 'module:factory'")
    module_name, attr = manifest.model.split(":", 1)
    module = importlib.import_module(module_name)
    factory = getattr(module, attr)
    return factory()

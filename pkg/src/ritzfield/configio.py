"""Run configuration files: flat key=value text in INI sections.

Every RunConfig field has exactly one key; unknown sections or keys are
rejected so a typo in a hyperparameter name fails loudly instead of silently
training with a default.  Reference configurations ship inside the package
and can be addressed by bare name.
"""

from __future__ import annotations

import configparser
from importlib import resources

from .driver import RunConfig
from .errors import ConfigurationError

# section -> key -> (RunConfig field, parser)
_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(s: str) -> bool:
    try:
        return _BOOL[s.strip().lower()]
    except KeyError:
        raise ConfigurationError(f"expected a boolean, got {s!r}") from None


def _parse_axes(s: str) -> tuple:
    return tuple(float(tok) for tok in s.replace(",", " ").split())


_SCHEMA = {
    "domain": {
        "dimension": ("dimension", int),
        "lo": ("lo", _parse_axes),
        "hi": ("hi", _parse_axes),
        "epsilon": ("epsilon", float),
        "m0": ("m0", float),
    },
    "features": {
        "kind": ("fmap_kind", str),
        "f_m": ("f_m", int),
        "m_rff": ("m_rff", int),
        "scale": ("fmap_scale", float),
        "wrap_inputs": ("wrap_inputs", _parse_bool),
    },
    "network": {
        "width": ("width", int),
        "n_blocks": ("n_blocks", int),
    },
    "training": {
        "mode": ("mode", str),
        "alpha": ("alpha", float),
        "outer_cycles": ("outer_cycles", int),
        "inner_epochs": ("inner_epochs", int),
        "lr": ("lr", float),
        "seed": ("seed", int),
        "adam_beta1": ("adam_beta1", float),
        "adam_beta2": ("adam_beta2", float),
        "adam_eps": ("adam_eps", float),
    },
    "sampling": {
        "energy_sampling": ("energy_sampling", str),
        "energy_batch": ("energy_batch", int),
        "include_right_edge": ("include_right_edge", _parse_bool),
        "mass_batch": ("mass_batch", int),
        "boundary_points": ("boundary_points", int),
    },
    "al": {
        "lambda0": ("lambda0", float),
        "mu0": ("mu0", float),
        "rho": ("rho", float),
        "mu_max": ("mu_max", float),
        "freeze_outer": ("freeze_outer", int),
    },
    "lbfgs": {
        "memory": ("lbfgs_memory", int),
        "max_iters": ("lbfgs_max_iters", int),
        "grad_tol": ("lbfgs_grad_tol", float),
    },
    "output": {
        "snapshot_resolution": ("snapshot_resolution", int),
    },
}

REQUIRED = ("dimension", "epsilon", "m0")


def reference_config_names() -> list[str]:
    files = resources.files("ritzfield.configs")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".cfg"))


def resolve_config(name_or_path: str) -> str:
    """Accepts a filesystem path or the bare name of a packaged config."""
    import os

    if os.path.exists(name_or_path):
        return name_or_path
    base = name_or_path if name_or_path.endswith(".cfg") else name_or_path + ".cfg"
    candidate = resources.files("ritzfield.configs") / base
    if candidate.is_file():
        return str(candidate)
    raise ConfigurationError(
        f"config {name_or_path!r} is neither a file nor one of "
        f"{', '.join(reference_config_names())}"
    )


def parse_config(path: str, overrides: dict | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        cp.read_file(fh, source=path)
    fields: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"{path}: unknown key '{key}' in [{section}]")
            field_name, cast = _SCHEMA[section][key]
            try:
                fields[field_name] = cast(raw)
            except (ValueError, ConfigurationError) as err:
                raise ConfigurationError(
                    f"{path}: bad value for '{key}' in [{section}]: {err}"
                ) from None
    for req in REQUIRED:
        if req not in fields:
            raise ConfigurationError(f"{path}: missing required key '{req}'")
    if overrides:
        fields.update(overrides)
    return RunConfig(**fields)

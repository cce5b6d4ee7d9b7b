"""Shipped reduced-model files and their lookup helper."""

from importlib import resources


def model_path(name):
    """Filesystem path of a shipped .model file (e.g. "doublewell-n6")."""
    fname = name if name.endswith(".model") else name + ".model"
    ref = resources.files(__package__).joinpath(fname)
    if not ref.is_file():
        raise FileNotFoundError(f"no shipped model named {name!r}")
    return str(ref)


def shipped_models():
    return sorted(
        p.name[: -len(".model")]
        for p in resources.files(__package__).iterdir()
        if p.name.endswith(".model")
    )

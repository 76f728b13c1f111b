"""Access to the bundled set-specification files.

The package ships the JSON set specs the acceptance suite and README refer
to by name; `setspec_path("onesided_a10.json")` resolves one to a real
filesystem path usable with `--set`.
"""

from importlib import resources

from ..errors import DomainError


def setspec_path(name: str) -> str:
    """Filesystem path of a bundled set-spec file, e.g. 'onesided_a10.json'."""
    ref = resources.files(__name__).joinpath(name)
    if not ref.is_file():
        raise DomainError(f"no bundled set spec named {name!r}")
    return str(ref)


def available() -> list[str]:
    ref = resources.files(__name__)
    return sorted(p.name for p in ref.iterdir() if p.name.endswith(".json"))

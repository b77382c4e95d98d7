"""Named preprocessing backends, one registry per tool kind."""

from ..errors import BackendUnavailable, DuplicateName

KINDS = ("ocr", "inpaint", "regions", "global", "caption")

_REGISTRY: dict = {kind: {} for kind in KINDS}


def register_backend(kind: str, name: str, factory) -> None:
    if kind not in _REGISTRY:
        raise ValueError(f"unknown backend kind {kind!r}")
    if name in _REGISTRY[kind]:
        raise DuplicateName(f"{kind} backend", name)
    _REGISTRY[kind][name] = factory


def get_backend(kind: str, backend, **options):
    """Instantiate ``backend`` (a name) or return it unchanged if already an object."""
    if not isinstance(backend, str):
        return backend
    try:
        factory = _REGISTRY[kind][backend]
    except KeyError:
        raise BackendUnavailable(f"no {kind} backend named {backend!r}") from None
    return factory(**options)


def available(kind: str) -> list:
    return sorted(_REGISTRY[kind])

"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """Invalid configuration or parameters."""


class CapacityError(ValueError):
    """Requested more objects than the canvas can hold."""


class KnowledgeMismatchError(Exception):
    """Encoder and decoder do not share the same background knowledge."""


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    pass

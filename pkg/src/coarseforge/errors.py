class CoarseForgeError(Exception):
    """Base class for library errors."""


class StructuralError(CoarseForgeError):
    """Input graph or construction violates a structural requirement."""


class DisconnectedGraphError(StructuralError):
    def __init__(self, u, v):
        super().__init__(f"graph is disconnected: no path between {u} and {v}")
        self.u = u
        self.v = v


class ArgumentError(CoarseForgeError, ValueError):
    """An argument is outside the operation's domain."""


class NonConfluentError(CoarseForgeError):
    def __init__(self, word, forms):
        super().__init__(f"rewriting rules are not confluent: {word!r} reduces to {forms[0]!r} and {forms[1]!r}")
        self.word = word
        self.forms = tuple(forms)


class UnverifiedFamilyError(CoarseForgeError):
    """A factor family was used before passing its check."""

"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`TableZoomerError`, so
callers (and the CLI) can catch one base class. LLM-transport failures get
their own branch because the reasoning loop treats "the model is gone" as
fatal while almost everything else degrades into a recorded observation.
"""

from __future__ import annotations


class TableZoomerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TableZoomerError):
    """Invalid or unknown configuration key/value."""


# --- table loading -----------------------------------------------------------

class MalformedTableError(TableZoomerError):
    """Input rows disagree with the header beyond the configured tolerance."""


class EmptyTableError(TableZoomerError):
    """File has a header but zero data rows."""


# --- LLM transport -----------------------------------------------------------

class LlmUnavailableError(TableZoomerError):
    """The configured LLM cannot produce a response at all."""


class EndpointError(LlmUnavailableError):
    """Live endpoint still failing after bounded retries."""


class FixtureMissError(LlmUnavailableError):
    """Replay store has no fixture for this canonicalized request."""


class ScriptExhaustedError(LlmUnavailableError):
    """Scripted client ran out of queued responses."""


class BudgetExceededError(TableZoomerError):
    """Prompt estimate exceeds the configured sequence budget; nothing was sent."""


# --- per-role response faults ------------------------------------------------

class MalformedAnnotationError(TableZoomerError):
    """Describer response not parseable as the required JSON after the re-ask."""


class MalformedPlanError(TableZoomerError):
    """Planner response not parseable as the required JSON after the re-ask."""


class PlanValidationError(TableZoomerError):
    """Plan references no usable columns after normalization."""


class MalformedGenerationError(TableZoomerError):
    """Code generation response missing required fields after the re-ask."""


class RepairBudgetExhausted(TableZoomerError):
    """A further repair would exceed 1 + max_repairs program attempts."""


class AnswerCoercionFailed(TableZoomerError):
    """Formatter output not coercible to the requested answer type."""


class DescribeFailedError(TableZoomerError):
    """Schema construction failed; the question cannot even start."""


# --- execution sandbox -------------------------------------------------------

class RunnerUnavailableError(TableZoomerError):
    """Script runner missing, failing its handshake, or violating the protocol."""


class SandboxViolationError(TableZoomerError):
    """A runner process touched data outside its sandbox contract."""


# --- evaluation --------------------------------------------------------------

class CorpusLoadFailed(TableZoomerError):
    """QA corpus unreadable or a record fails validation; message names the spot."""

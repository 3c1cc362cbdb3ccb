"""Table question answering through schema description, query-aware zooming,
and program-of-thoughts execution with reflective retries."""

from .config import AppConfig, load_config
from .controller import FinalAnswer, answer_question
from .describer import GlobalSchema, describe_once
from .errors import TableZoomerError
from .executor import ExecutorGateway
from .harness import em_score, load_corpus, run_benchmark
from .llm import LiveClient, ReplayClient, ScriptedClient
from .planner import QueryPlan, plan
from .refiner import RefinedSchema, lcs_overlap, link_entity, zoom
from .serialize import TableFormat, serialize_schema, serialize_table
from .store import Table, load_table

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "ExecutorGateway",
    "FinalAnswer",
    "GlobalSchema",
    "LiveClient",
    "QueryPlan",
    "RefinedSchema",
    "ReplayClient",
    "ScriptedClient",
    "Table",
    "TableFormat",
    "TableZoomerError",
    "answer_question",
    "describe_once",
    "em_score",
    "lcs_overlap",
    "link_entity",
    "load_config",
    "load_corpus",
    "load_table",
    "plan",
    "run_benchmark",
    "serialize_schema",
    "serialize_table",
    "zoom",
]

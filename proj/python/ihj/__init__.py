from ._ihj import (
    Expression,
    FileError,
    GotayNesterResult,
    OneFormCandidate,
    ParseError,
    Report,
    SearchResult,
    VerifyResult,
    gotay_nester,
    parse,
    run_command,
    search_oneform,
    verify_oneform,
)

__all__ = [
    "Expression",
    "FileError",
    "GotayNesterResult",
    "OneFormCandidate",
    "ParseError",
    "Report",
    "SearchResult",
    "VerifyResult",
    "gotay_nester",
    "parse",
    "run_command",
    "search_oneform",
    "verify_oneform",
]

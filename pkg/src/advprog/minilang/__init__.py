"""MiniLang: lexer, parser, interpreter, obfuscation sites and corpus."""
from .corpus import CorpusConfig, CorpusEntry, generate_corpus, read_jsonl, replacement_pool, write_jsonl
from .interpreter import FuelExhausted, MiniRuntimeError, interpret
from .lexer import LexError, Token, TokenKind, model_tokens, tokenize
from .nodes import Function
from .parser import ParseError, parse, parse_source, unparse
from .sites import Site, SiteMap, TransformKind, extract_sites, restrict_sites
from .transforms import IllegalSelection, materialize
from .vocab import NUL_ID, UNK_ID, Vocabulary, build_vocabulary

__all__ = [
    "CorpusConfig",
    "CorpusEntry",
    "FuelExhausted",
    "Function",
    "IllegalSelection",
    "LexError",
    "MiniRuntimeError",
    "NUL_ID",
    "ParseError",
    "Site",
    "SiteMap",
    "Token",
    "TokenKind",
    "TransformKind",
    "UNK_ID",
    "Vocabulary",
    "build_vocabulary",
    "extract_sites",
    "generate_corpus",
    "interpret",
    "materialize",
    "model_tokens",
    "parse",
    "parse_source",
    "read_jsonl",
    "replacement_pool",
    "restrict_sites",
    "tokenize",
    "unparse",
    "write_jsonl",
]

"""Prompt template assembly with plug-and-play function registration.

Templates are data, loaded from a JSON file, so operators can replace the
wording without rebuilding. A rendered prompt contains, in order: the
prefix, every registered function's name and description, the output
format contract, the few-shot examples, and finally the user instruction
wrapped in a fixed sentinel line pair so its placement is testable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import parsing
from .errors import DuplicateFunction, EmptyInstruction, ParseError, TemplateInvalid

TEMPLATE_VERSION = 1

INSTRUCTION_OPEN = "[[INSTRUCTION]]"
INSTRUCTION_CLOSE = "[[/INSTRUCTION]]"


@dataclass(frozen=True)
class FunctionDescriptor:
    """Name, description, and parameter names of one declarable function."""

    name: str
    description: str
    parameter_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise TemplateInvalid("function name must be non-empty")
        if not self.parameter_names:
            raise TemplateInvalid(f"function {self.name!r} declares no parameters")


@dataclass(frozen=True)
class FewShotExample:
    """One demonstration pair: a user instruction and the expected response."""

    user_instruction: str
    expected_response: str


class FunctionRegistry:
    """Ordered, name-unique collection of function descriptors."""

    def __init__(self) -> None:
        self._functions: dict[str, FunctionDescriptor] = {}

    def register(self, descriptor: FunctionDescriptor) -> "FunctionRegistry":
        if descriptor.name in self._functions:
            raise DuplicateFunction(f"function {descriptor.name!r} already registered")
        self._functions[descriptor.name] = descriptor
        return self

    @property
    def descriptors(self) -> tuple[FunctionDescriptor, ...]:
        return tuple(self._functions.values())

    def names(self) -> tuple[str, ...]:
        return tuple(self._functions)

    def __len__(self) -> int:
        return len(self._functions)

    def __contains__(self, name: str) -> bool:
        return name in self._functions


def register_function(registry: FunctionRegistry, descriptor: FunctionDescriptor) -> FunctionRegistry:
    """Add a descriptor to the registry; duplicate names are rejected."""
    return registry.register(descriptor)


@dataclass(frozen=True)
class PromptTemplate:
    """The full prompt recipe: prefix, functions, output contract, examples."""

    prefix: str
    functions: tuple[FunctionDescriptor, ...]
    output_format_spec: str
    examples: tuple[FewShotExample, ...]
    template_version: int = TEMPLATE_VERSION


def render_prompt(template: PromptTemplate, user_instruction: str) -> str:
    """Render the template around a user instruction.

    Pure: identical inputs produce byte-identical output. The instruction
    is embedded verbatim between the sentinel lines, so distinct
    instructions always yield distinct prompts.
    """
    if not user_instruction.strip():
        raise EmptyInstruction("user instruction is blank")
    lines = [template.prefix, "", "Available functions:"]
    for fn in template.functions:
        params = ", ".join(fn.parameter_names)
        lines.append(f"- {fn.name}: {fn.description} (parameters: {params})")
    lines += ["", "Output format:", template.output_format_spec, "", "Examples:"]
    for ex in template.examples:
        lines.append(f"User: {ex.user_instruction}")
        lines.append(f"Assistant: {ex.expected_response}")
    lines += ["", INSTRUCTION_OPEN, user_instruction, INSTRUCTION_CLOSE]
    return "\n".join(lines)


def instruction_from_prompt(text: str) -> str | None:
    """Recover the sentinel-delimited instruction from a rendered prompt, if any."""
    start = text.rfind(INSTRUCTION_OPEN)
    if start < 0:
        return None
    start += len(INSTRUCTION_OPEN)
    end = text.find(INSTRUCTION_CLOSE, start)
    if end < 0:
        return None
    return text[start:end].strip("\n")


def _example_function_name(example: FewShotExample) -> str:
    try:
        parsed = parsing.parse_agent_response(example.expected_response)
    except ParseError as exc:
        raise TemplateInvalid(
            f"example for {example.user_instruction!r} does not parse: {exc}"
        ) from exc
    if isinstance(parsed, parsing.NotTryOn):
        return parsing.NONE_FUNCTION
    return parsed.function.value


def validate_template(template: PromptTemplate) -> None:
    """Check template invariants; raises TemplateInvalid on the first violation."""
    if not template.functions:
        raise TemplateInvalid("template declares no functions")
    if template.template_version != TEMPLATE_VERSION:
        raise TemplateInvalid(
            f"unsupported template_version {template.template_version}, "
            f"this build supports {TEMPLATE_VERSION}"
        )
    for key in ("function", "item", "details", "reply"):
        if key not in template.output_format_spec:
            raise TemplateInvalid(f"output format does not mention required key {key!r}")
    covered = {_example_function_name(ex) for ex in template.examples}
    for fn in template.functions:
        if fn.name not in covered:
            raise TemplateInvalid(f"function {fn.name!r} has no few-shot example")


def template_from_dict(doc: dict) -> PromptTemplate:
    """Build and validate a PromptTemplate from a decoded template document."""
    try:
        version = int(doc["template_version"])
        prefix = str(doc["prefix"])
        output_format = str(doc["output_format"])
        raw_functions = doc["functions"]
        raw_examples = doc["examples"]
    except (KeyError, TypeError, ValueError) as exc:
        raise TemplateInvalid(f"template document malformed: {exc}") from exc
    if not isinstance(raw_functions, list) or not isinstance(raw_examples, list):
        raise TemplateInvalid("'functions' and 'examples' must be lists")

    registry = FunctionRegistry()
    for entry in raw_functions:
        try:
            descriptor = FunctionDescriptor(
                name=str(entry["name"]),
                description=str(entry["description"]),
                parameter_names=tuple(str(p) for p in entry["parameters"]),
            )
        except (KeyError, TypeError) as exc:
            raise TemplateInvalid(f"function entry malformed: {exc}") from exc
        registry.register(descriptor)

    examples = []
    for entry in raw_examples:
        try:
            examples.append(
                FewShotExample(
                    user_instruction=str(entry["user"]),
                    expected_response=str(entry["assistant"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise TemplateInvalid(f"example entry malformed: {exc}") from exc

    template = PromptTemplate(
        prefix=prefix,
        functions=registry.descriptors,
        output_format_spec=output_format,
        examples=tuple(examples),
        template_version=version,
    )
    validate_template(template)
    return template


def load_template(path: str | Path) -> PromptTemplate:
    """Load and validate a template file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise TemplateInvalid(f"cannot read template file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TemplateInvalid(f"template file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TemplateInvalid("template file must contain a JSON object")
    return template_from_dict(doc)


def default_template() -> PromptTemplate:
    """The template shipped with the package."""
    text = resources.files("tryfit.data").joinpath("template.json").read_text(encoding="utf-8")
    return template_from_dict(json.loads(text))

from __future__ import annotations

import json
import random
import string

import pytest

from tryfit import parsing
from tryfit.errors import (
    ItemRequired,
    MalformedBlock,
    MissingDetails,
    NoStructuredBlock,
    ParseError,
    UnknownFunction,
)
from tryfit.parsing import FunctionKind, Invocation, ItemKind, NotTryOn


# --- extract_structured_block ---

def test_extract_strips_surrounding_prose() -> None:
    raw = 'Sure! {"function":"x"} hope that helps'
    assert parsing.extract_structured_block(raw) == '{"function":"x"}'


def test_extract_identity_on_bare_block() -> None:
    raw = '{"a":{"b":1}}'
    assert parsing.extract_structured_block(raw) == raw


def test_extract_no_block() -> None:
    with pytest.raises(NoStructuredBlock):
        parsing.extract_structured_block("no braces here")


def test_extract_inner_block_when_outer_unclosed() -> None:
    assert parsing.extract_structured_block('{ {"a":1} {"b":2}') == '{"a":1}'


def test_extract_ignores_braces_inside_strings() -> None:
    raw = '{"reply": "smile :} ok", "x": 1}'
    assert parsing.extract_structured_block(raw) == raw


def test_extract_idempotent() -> None:
    rng = random.Random(42)
    for _ in range(200):
        raw = "".join(rng.choice('{}"ab\\ :,1') for _ in range(rng.randrange(1, 30)))
        try:
            block = parsing.extract_structured_block(raw)
        except NoStructuredBlock:
            continue
        assert parsing.extract_structured_block(block) == block


# --- parse_invocation ---

def test_parse_full_mapping() -> None:
    raw = (
        '{"function":"full_outfit_change","item":"upper_body",'
        '"details":"red floral blouse","reply":"Sure, changing your top."}'
    )
    inv = parsing.parse_invocation(raw)
    assert inv == Invocation(
        FunctionKind.FULL_OUTFIT_CHANGE, ItemKind.UPPER_BODY,
        "red floral blouse", "Sure, changing your top.",
    )


def test_parse_defaults_item_and_reply() -> None:
    inv = parsing.parse_invocation('{"function":"localized_editing","details":"make the sleeves short"}')
    assert inv.item is ItemKind.UNSPECIFIED
    assert inv.reply == ""
    assert inv.function is FunctionKind.LOCALIZED_EDITING


def test_parse_item_required_for_outfit_change() -> None:
    with pytest.raises(ItemRequired):
        parsing.parse_invocation('{"function":"full_outfit_change","details":"blue dress"}')


def test_parse_unknown_function() -> None:
    with pytest.raises(UnknownFunction) as err:
        parsing.parse_invocation('{"function":"teleport","item":"upper_body","details":"x"}')
    assert err.value.name == "teleport"


def test_parse_missing_details() -> None:
    with pytest.raises(MissingDetails):
        parsing.parse_invocation('{"function":"localized_editing"}')
    with pytest.raises(MissingDetails):
        parsing.parse_invocation('{"function":"localized_editing","details":"   "}')


def test_parse_malformed_block() -> None:
    with pytest.raises(MalformedBlock):
        parsing.parse_invocation("{not json}")
    with pytest.raises(MalformedBlock):
        parsing.parse_invocation('{"function": 5, "details": "x"}')


def test_parse_case_and_whitespace_jitter() -> None:
    inv = parsing.parse_invocation(
        '{"function":" Full_Outfit_Change ","item":" UPPER_BODY ","details":"a red top"}'
    )
    assert inv.function is FunctionKind.FULL_OUTFIT_CHANGE
    assert inv.item is ItemKind.UPPER_BODY


def test_parse_unknown_keys_ignored() -> None:
    inv = parsing.parse_invocation(
        '{"function":"localized_editing","details":"x","confidence":0.9,"extra":[1]}'
    )
    assert inv.details == "x"


def test_parse_none_function_is_unknown_to_closed_parser() -> None:
    with pytest.raises(UnknownFunction):
        parsing.parse_invocation('{"function":"none","reply":"hi"}')


def test_parse_agent_response_handles_none() -> None:
    parsed = parsing.parse_agent_response('{"function":"none","reply":"small talk"}')
    assert parsed == NotTryOn(reply="small talk")


def test_parse_agent_response_passes_through_invocations() -> None:
    parsed = parsing.parse_agent_response(
        'noise {"function":"localized_editing","details":"shorter hem"} noise'
    )
    assert isinstance(parsed, Invocation)
    assert parsed.details == "shorter hem"


# --- recovery soundness and round-trip ---

def test_recovery_soundness_on_noisy_wrappers() -> None:
    # If parse succeeds on the noisy text, it must succeed with an equal
    # result on the extracted block alone.
    rng = random.Random(7)
    payload = '{"function":"localized_editing","details":"tweak the collar","reply":"ok"}'
    noise_alphabet = string.printable.replace("{", "").replace("}", "")
    succeeded = 0
    for _ in range(100):
        prefix = "".join(rng.choice(noise_alphabet) for _ in range(rng.randrange(0, 20)))
        suffix = "".join(rng.choice(noise_alphabet) for _ in range(rng.randrange(0, 20)))
        raw = prefix + payload + suffix
        try:
            first = parsing.parse_invocation(raw)
        except ParseError:
            continue
        succeeded += 1
        again = parsing.parse_invocation(parsing.extract_structured_block(raw))
        assert first == again
    assert succeeded >= 90  # quote-free and balanced-quote noise always recovers


def test_recovery_on_common_prose_wrappers() -> None:
    payload = '{"function":"localized_editing","details":"tweak the collar","reply":"ok"}'
    for raw in (
        f"Sure thing! {payload}",
        f"{payload}\nLet me know if that works.",
        f'Here is the "result": {payload} :)',
        f"```json\n{payload}\n```",
    ):
        assert parsing.parse_invocation(raw).details == "tweak the collar"


def random_invocation(rng: random.Random) -> Invocation:
    function = rng.choice(list(FunctionKind))
    if function is FunctionKind.FULL_OUTFIT_CHANGE:
        item = rng.choice([ItemKind.UPPER_BODY, ItemKind.LOWER_BODY, ItemKind.FULL_BODY])
    else:
        item = rng.choice(list(ItemKind))
    alphabet = string.printable + "ü漢字🧵"

    def text(min_len: int) -> str:
        while True:
            value = "".join(rng.choice(alphabet) for _ in range(rng.randrange(min_len, 24)))
            if min_len == 0 or value.strip():
                return value

    return Invocation(function=function, item=item, details=text(1), reply=text(0))


def test_roundtrip_random_invocations() -> None:
    rng = random.Random(123)
    for _ in range(500):
        inv = random_invocation(rng)
        assert parsing.parse_invocation(parsing.format_invocation(inv)) == inv


# --- totality (fuzz smoke; the full-size run lives in the acceptance suite) ---

def fuzz_inputs(rng: random.Random, count: int):
    valid = '{"function":"full_outfit_change","item":"lower_body","details":"jeans","reply":"ok"}'
    for _ in range(count):
        choice = rng.randrange(4)
        if choice == 0:
            yield bytes(rng.randrange(256) for _ in range(rng.randrange(0, 48))).decode("latin1")
        elif choice == 1:
            yield "".join(rng.choice('{}[]":,abc \n\\') for _ in range(rng.randrange(0, 48)))
        elif choice == 2:
            chars = list(valid)
            for _ in range(rng.randrange(1, 6)):
                pos = rng.randrange(len(chars))
                chars[pos] = chr(rng.randrange(32, 127))
            yield "".join(chars)
        else:
            yield json.dumps({rng.choice(["function", "item", "details", "reply", "x"]):
                              rng.choice(["full_outfit_change", "none", 1, None, [], {}])})


def test_fuzz_totality_smoke() -> None:
    rng = random.Random(99)
    for raw in fuzz_inputs(rng, 20_000):
        try:
            result = parsing.parse_invocation(raw)
            assert isinstance(result, Invocation)
        except ParseError:
            pass

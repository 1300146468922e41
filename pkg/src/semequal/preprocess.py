"""
Functionality for reading and writing configuration values.

Configuration files are line oriented: `section.key = value`, `#` starts a comment and
blank lines are ignored. Values are booleans, integers, floats, strings, or
comma-separated lists of those.

Functions:
    stringify: Convert a single value to its file representation.
    process_param_list: Convert a list of values to a comma-separated string.
    parse_value: Convert one value string back to a Python value.
    parse_config_text: Parse a whole configuration file into nested sections.

Types:
    _Types: Type alias for a single string, integer, float, or boolean.
    _ListTypes: Type alias for a list of those.
"""

import re
import sys

from semequal.exceptions import ConfigError

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

_Types = typing.Union[int, float, str, bool]
_ListTypes = typing.List[typing.Union[int, float, str, bool]]
ParsedValue = typing.Union[_Types, _ListTypes]
ParsedSections: typing.TypeAlias = typing.Dict[str, typing.Dict[str, ParsedValue]]

_INTEGER = re.compile(r"^[+-]?\d+$")
_LINE = re.compile(r"^(?P<section>[A-Za-z_]\w*)\.(?P<key>[A-Za-z_]\w*)\s*=\s*(?P<value>.*)$")


def stringify(argument: _Types) -> str:
    """
    Convert a single value to a string.

    Args:
        argument (_Types): The value to be converted to a string.

    Returns:
        str: The stringified version of the input.

    Raises:
        ConfigError: If the input is not a string, number, or boolean.

    Examples:
        >>> stringify(True)
        'true'
        >>> stringify(42)
        '42'
        >>> stringify(0.001)
        '0.001'
    """
    if isinstance(argument, bool):
        return str(argument).lower()
    if isinstance(argument, int):
        return str(argument)
    if isinstance(argument, float):
        return repr(argument)
    if isinstance(argument, str):
        return argument
    raise ConfigError(f"Value {argument} is not a string, number, or boolean.")


def process_param_list(parameter_list: typing.Sequence[_Types]) -> str:
    """
    Concatenate a list of values into a comma-separated string.

    Examples:
        >>> process_param_list([0, 0.1, 0.2])
        '0,0.1,0.2'
    """
    return ",".join(stringify(parameter_element) for parameter_element in parameter_list)


def _parse_scalar(text: str) -> _Types:
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if _INTEGER.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def parse_value(text: str) -> ParsedValue:
    """
    Parse one configuration value.

    Args:
        text (str): The raw value.

    Returns:
        ParsedValue: A bool, int, float, str, or a list of those when the value
            contains commas.

    Examples:
        >>> parse_value("true")
        True
        >>> parse_value("0,0.1")
        [0, 0.1]
        >>> parse_value("cnn")
        'cnn'
    """
    stripped = text.strip()
    if "," in stripped:
        return [_parse_scalar(part.strip()) for part in stripped.split(",") if part.strip()]
    return _parse_scalar(stripped)


def parse_config_text(text: str) -> ParsedSections:
    """
    Parse a configuration file.

    Args:
        text (str): File contents.

    Returns:
        ParsedSections: Values by section and key.

    Raises:
        ConfigError: If a line is not of the form `section.key = value`.
    """
    sections: ParsedSections = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        match = _LINE.match(line)
        if match is None:
            raise ConfigError(f"Line {number} is not `section.key = value`: {raw_line!r}")
        section = sections.setdefault(match.group("section"), {})
        section[match.group("key")] = parse_value(match.group("value"))
    return sections

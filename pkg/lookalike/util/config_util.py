"""
Utilities for reading experiment config files.

Config files are INI files with `key = value` lines, e.g.

    [problem]
    n = 300
    d = 500
    p = 200
    k = 3
    mu = 5.0

    [priors]
    pi1 = 0.2
    pi2 = 0.3
    pi3 = 0.5
"""

from configparser import ConfigParser, Error as ConfigParserError
import os

from .errors import ConfigError


def parse_value(text):
    """Parse a config string into an int, float, bool, list, or str."""
    text = text.strip()
    if ',' in text:
        return [parse_value(tok) for tok in text.split(',') if tok.strip()]
    low = text.lower()
    if low in ('true', 'yes', 'on'):
        return True
    if low in ('false', 'no', 'off'):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_config(path):
    """
    Read an INI config file.

    Parameters
    ----------
    path : str
        Path to the config file.

    Returns
    -------
    sections : dict
        Dict mapping section name to a dict of parsed values.
    """
    if not os.path.isfile(path):
        raise ConfigError(f'config file not found: {path}')

    config = ConfigParser(delimiters=['='])
    try:
        config.read(path)
    except ConfigParserError as e:
        raise ConfigError(f'cannot parse {path}: {e}') from e

    sections = {}
    for name in config.sections():
        sections[name] = {key: parse_value(val) for key, val in config[name].items()}
    return sections


def priors_from_section(section):
    """Return the prior vector from a [priors] section, ordered by key suffix."""
    if not section:
        return None

    def key_index(key):
        digits = ''.join(ch for ch in key if ch.isdigit())
        if not digits:
            raise ConfigError(f'prior key {key!r} must end in a cluster number')
        return int(digits)

    keys = sorted(section, key=key_index)
    return [float(section[key]) for key in keys]


def check_known_keys(section_name, section, known):
    """Raise ConfigError if section has keys outside of known."""
    unknown = sorted(set(section) - set(known))
    if unknown:
        raise ConfigError(f'unknown keys in [{section_name}]: {", ".join(unknown)}')

"""
Base class for configurable lab objects.
"""

from argparse import Namespace

from .misc_util import dict_to_namespace, print_info


class Base:
    """
    Configurable object: parameters live in self.params, filled with defaults in
    set_params and checked in validate.
    """

    def __init__(self, params=None, verbose=False):
        """
        Parameters
        ----------
        params : Namespace_or_dict
            Namespace or dict of parameters for this object.
        verbose : bool
            If True, print description string.
        """
        self.verbose_init_arg = verbose
        self.set_params(params)
        self.validate()
        if self.params.verbose:
            self.print_init()

    def set_params(self, params):
        """Set self.params, the parameters for this object."""
        params = dict_to_namespace(params)

        self.params = Namespace()
        self.params.name = getattr(params, 'name', 'Base')
        self.params.verbose = getattr(params, 'verbose', self.verbose_init_arg)

    def validate(self):
        """Raise ConfigError if self.params is invalid."""

    def print_init(self):
        """Print a description string when object created."""
        print_info('Initialized ' + str(self))

    def to_dict(self):
        """Return the parameters as a plain dict (without name and verbose)."""
        out = dict(vars(self.params))
        out.pop('name', None)
        out.pop('verbose', None)
        return out

    def __str__(self):
        return f'{self.params.name} with params={self.to_dict()}'

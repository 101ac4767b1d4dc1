"""Console entry point: ``curvecast fit|predict|report|simulate|summarize``."""

import sys

import django
from django.conf import settings

from curvecast.utils import logging_config


def main(argv=None):
    """Run the ``curvecast`` management command without a Django project."""
    argv = sys.argv[1:] if argv is None else list(argv)
    if not settings.configured:
        settings.configure(
            INSTALLED_APPS=["curvecast"],
            LOGGING=logging_config(),
            USE_TZ=True,
        )
    django.setup()

    from curvecast.management.commands.curvecast import Command

    Command().run_from_argv(["curvecast", "curvecast", *argv])


if __name__ == "__main__":
    main()

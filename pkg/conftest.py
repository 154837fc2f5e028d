import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "causalqft.settings")
django.setup()

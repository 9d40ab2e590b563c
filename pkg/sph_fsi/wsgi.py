"""
WSGI config for sph_fsi project.

Serves the admin site of the run registry (``manage.py runserver``).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sph_fsi.settings')

application = get_wsgi_application()

"""Configure Django for pytest the same way manage.py does."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'nlslab_project.settings')
django.setup()

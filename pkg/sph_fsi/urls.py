"""
URL configuration for sph_fsi project.

Only the admin site is exposed; it is used to browse the run registry.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]

"""
URL configuration for the bounds application.

Includes routes for:
- API endpoints for stored experiment runs and their rows
- the worst-case computation endpoint
"""
from django.urls import include, path
from rest_framework.routers import DefaultRouter

from . import views

router = DefaultRouter()
router.register('runs', views.RunViewSet)
router.register('rows', views.RowViewSet)

urlpatterns = [
    path('api/', include(router.urls)),
    path('api/worst-case/', views.WorstCaseView.as_view(), name='worst_case'),
]

"""Contains viewsets for the API."""

from rest_framework import viewsets

from .permissions import APIPermission


def create_view_set(model_class, serializer, filter_field=None):
    """
    Create ViewSets for stored experiment results.

    Args:
        model_class: Model class.
        serializer: Serializer class.
        filter_field: Optional field filtered by the query parameter of the same name.

    Returns:
        class: ViewSet class.
    """
    class CustomViewSet(viewsets.ModelViewSet):
        """ViewSet over one model with superuser-only writes."""

        queryset = model_class.objects.all()
        serializer_class = serializer
        permission_classes = [APIPermission]

        def get_queryset(self):
            queryset = super().get_queryset()
            if filter_field and filter_field in self.request.query_params:
                queryset = queryset.filter(**{filter_field: self.request.query_params[filter_field]})
            return queryset

    return CustomViewSet

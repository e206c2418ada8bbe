"""Contains API views for stored runs and on-demand worst-case values."""

import logging

from django.core.exceptions import ValidationError
from rest_framework import status
from rest_framework.response import Response
from rest_framework.views import APIView

from .bounds import worst_case_es_result, worst_case_var
from .models import ExperimentRun, SweepRow
from .permissions import ComputePermission
from .serializers import (BUILT, ExperimentRunSerializer,
                          SweepRowSerializer, WorstCaseRequestSerializer,
                          default_optimizer)
from .viewsets import create_view_set

logger = logging.getLogger(__name__)

RunViewSet = create_view_set(ExperimentRun, ExperimentRunSerializer, filter_field='kind')
RowViewSet = create_view_set(SweepRow, SweepRowSerializer, filter_field='run')


class WorstCaseView(APIView):
    """Worst-case VaR or ES of the posted margins at level p."""

    permission_classes = [ComputePermission]

    def post(self, request):
        """
        Compute the bound described by the request body.

        Args:
            request: Request with p, margins, measure and optional optimizer.

        Returns:
            Response: BoundResult as a dictionary, or field errors with status 400.
        """
        serializer = WorstCaseRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data
        optimizer = data.get('optimizer')
        try:
            if data['measure'] == 'es':
                result = worst_case_es_result(data['p'], data['margins'])
            else:
                options = optimizer[BUILT] if optimizer else default_optimizer()
                result = worst_case_var(data['p'], data['margins'], options)
        except ValidationError as error:
            logger.info('Rejected worst-case request: %s', error.messages)
            return Response({'detail': error.messages}, status=status.HTTP_400_BAD_REQUEST)
        return Response(result.as_dict())

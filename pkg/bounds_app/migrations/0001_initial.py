# Generated by Django 5.0.6 on 2026-10-12 09:12

import bounds_app.models
import django.core.validators
import django.db.models.deletion
import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('created', models.DateTimeField(blank=True, default=bounds_app.models.get_datetime, null=True, validators=[bounds_app.models.check_created], verbose_name='created')),
                ('name', models.TextField(max_length=100, verbose_name='name')),
                ('kind', models.CharField(choices=[('sweep', 'sweep'), ('monotonicity', 'non-monotonicity check')], default='sweep', max_length=20, verbose_name='kind')),
                ('config', models.JSONField(default=dict, verbose_name='config')),
                ('seed', models.IntegerField(default=42, verbose_name='seed')),
                ('verdict', models.BooleanField(blank=True, null=True, verbose_name='non-monotone detected')),
            ],
            options={
                'verbose_name': 'experiment run',
                'verbose_name_plural': 'experiment runs',
                'ordering': ['-created', 'name'],
            },
        ),
        migrations.CreateModel(
            name='SweepRow',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('k', models.PositiveIntegerField(validators=[django.core.validators.MinValueValidator(0)], verbose_name='power')),
                ('kind', models.CharField(choices=[('quantile', 'quantile mixture'), ('distribution', 'distribution mixture')], max_length=20, verbose_name='mixture kind')),
                ('engine', models.CharField(choices=[('dual', 'dual'), ('ra', 'rearrangement'), ('es', 'expected shortfall')], max_length=10, verbose_name='engine')),
                ('value', models.FloatField(blank=True, null=True, verbose_name='value')),
                ('exactness', models.CharField(blank=True, default='', max_length=20, verbose_name='exactness')),
                ('converged', models.BooleanField(default=True, verbose_name='converged')),
                ('beta_star', models.TextField(blank=True, default='', validators=[bounds_app.models.check_beta_star], verbose_name='optimal beta')),
                ('wall_time_ms', models.FloatField(default=0, validators=[django.core.validators.MinValueValidator(0)], verbose_name='wall time, ms')),
                ('error', models.TextField(blank=True, default='', verbose_name='error')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='rows', to='bounds_app.experimentrun', verbose_name='run')),
            ],
            options={
                'verbose_name': 'sweep row',
                'verbose_name_plural': 'sweep rows',
                'ordering': ['run', 'k', 'kind', 'engine'],
            },
        ),
    ]

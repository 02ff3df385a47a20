# Generated by Django 4.2.4 on 2026-10-18 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(help_text='Management command name (e.g. sweep)', max_length=50)),
                ('arguments', models.JSONField(default=dict, help_text='Command options as given')),
                ('config', models.JSONField(default=dict, help_text='Effective section.key configuration')),
                ('seeds', models.JSONField(blank=True, default=list)),
                ('model_hashes', models.JSONField(blank=True, default=dict, help_text='sha256 of every model file read or written', verbose_name='Model hashes')),
                ('outputs', models.JSONField(blank=True, default=list)),
                ('version', models.CharField(max_length=20)),
                ('started_at', models.DateTimeField(verbose_name='Started')),
                ('finished_at', models.DateTimeField(blank=True, null=True, verbose_name='Finished')),
                ('status', models.CharField(choices=[('r', 'Running'), ('s', 'Succeeded'), ('f', 'Failed')], default='r', help_text='Run outcome', max_length=1)),
                ('error', models.TextField(blank=True)),
            ],
            options={
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='SweepResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('snr_db', models.FloatField(blank=True, help_text='Empty for the ideal channel', null=True, verbose_name='SNR (dB)')),
                ('ratio', models.FloatField()),
                ('seed', models.PositiveIntegerField()),
                ('user', models.PositiveSmallIntegerField()),
                ('sorting', models.CharField(choices=[('sensitivity', 'Sensitivity'), ('random', 'Random')], default='sensitivity', max_length=11)),
                ('normalization', models.CharField(choices=[('on', 'On'), ('off', 'Off')], default='on', max_length=3)),
                ('mse', models.FloatField()),
                ('psnr_db', models.FloatField(blank=True, help_text='Empty for identical images', null=True, verbose_name='PSNR (dB)')),
                ('ssim', models.FloatField(verbose_name='SSIM')),
                ('post_fading_snr_db', models.FloatField(blank=True, null=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='semcom.experimentrun')),
            ],
            options={
                'ordering': ['run', 'snr_db', 'ratio', 'sorting', 'normalization', 'seed', 'user'],
            },
        ),
    ]

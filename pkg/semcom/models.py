from django.db import models


class ExperimentRun(models.Model):
    """Model representing one command execution and everything needed to repeat it."""
    command = models.CharField(max_length=50, help_text='Management command name (e.g. sweep)')
    arguments = models.JSONField(default=dict, help_text='Command options as given')
    config = models.JSONField(default=dict, help_text='Effective section.key configuration')
    seeds = models.JSONField(default=list, blank=True)
    model_hashes = models.JSONField('Model hashes', default=dict, blank=True,
                                    help_text='sha256 of every model file read or written')
    outputs = models.JSONField(default=list, blank=True)
    version = models.CharField(max_length=20)
    started_at = models.DateTimeField('Started')
    finished_at = models.DateTimeField('Finished', null=True, blank=True)

    RUN_STATUS = (
        ('r', 'Running'),
        ('s', 'Succeeded'),
        ('f', 'Failed'),
    )

    status = models.CharField(
        max_length=1,
        choices=RUN_STATUS,
        default='r',
        help_text='Run outcome',
    )
    error = models.TextField(blank=True)

    class Meta:
        ordering = ['-started_at']

    def __str__(self):
        """String for representing the Model object."""
        return f'{self.command} ({self.started_at:%Y-%m-%d %H:%M:%S}, {self.get_status_display()})'

    def duration(self):
        """Wall-clock seconds, or None while running."""
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()


class SweepResult(models.Model):
    """One sweep record: a grid point, seed and user."""
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='results')
    snr_db = models.FloatField('SNR (dB)', null=True, blank=True, help_text='Empty for the ideal channel')
    ratio = models.FloatField()
    seed = models.PositiveIntegerField()
    user = models.PositiveSmallIntegerField()

    SORTING = (
        ('sensitivity', 'Sensitivity'),
        ('random', 'Random'),
    )

    sorting = models.CharField(max_length=11, choices=SORTING, default='sensitivity')
    normalization = models.CharField(max_length=3, choices=(('on', 'On'), ('off', 'Off')), default='on')
    mse = models.FloatField()
    psnr_db = models.FloatField('PSNR (dB)', null=True, blank=True, help_text='Empty for identical images')
    ssim = models.FloatField('SSIM')
    post_fading_snr_db = models.FloatField(null=True, blank=True)

    class Meta:
        ordering = ['run', 'snr_db', 'ratio', 'sorting', 'normalization', 'seed', 'user']

    def __str__(self):
        """String for representing the Model object."""
        return f'user {self.user} @ {self.snr_db} dB, r={self.ratio} (seed {self.seed})'

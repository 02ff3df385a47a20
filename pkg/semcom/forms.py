from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .channel import CHANNEL_MODES, SrParams
from .exceptions import ConfigError
from .ortho import OrthoBasis
from .pipeline import COMBINERS
from .ranking import RANKING_MODES

ON_OFF = (('on', 'on'), ('off', 'off'))


def field_name(key):
    """Form field name for a ``section.key`` config key."""
    return key.replace('.', '__')


def config_key(name):
    return name.replace('__', '.')


def _number_list(value, cast, count=None):
    try:
        numbers = tuple(cast(item) for item in value.split(','))
    except ValueError:
        raise ValidationError(_('Invalid list - expected comma-separated numbers'))
    if count is not None and len(numbers) != count:
        raise ValidationError(_('Invalid list - expected %(count)d values'), params={'count': count})
    return numbers


def _interval(value):
    try:
        low, high = (float(item) for item in value.split(':'))
    except ValueError:
        raise ValidationError(_('Invalid range - expected "low:high" in dB'))
    if low > high:
        raise ValidationError(_('Invalid range - low end above high end'))
    return low, high


class ExperimentConfigForm(forms.Form):
    """Validates a flat experiment configuration (field ``a__b`` holds key ``a.b``)."""
    seed__base = forms.IntegerField(min_value=0, help_text='Base seed for every random stream.')

    data__dir = forms.CharField(help_text='Directory holding index.csv and the image pairs.')
    data__size = forms.IntegerField(min_value=1)
    data__channels = forms.TypedChoiceField(choices=((1, '1'), (3, '3')), coerce=int)
    data__count = forms.IntegerField(min_value=1)
    data__edit_fraction = forms.FloatField(min_value=0.0, max_value=1.0)
    data__shapes = forms.IntegerField(min_value=0)

    semantic__hidden = forms.IntegerField(min_value=1)
    semantic__feature_dim = forms.IntegerField(min_value=8, help_text='Even feature length d.')
    semantic__epochs = forms.IntegerField(min_value=0)
    semantic__learning_rate = forms.FloatField()

    channel_codec__encoder_widths = forms.CharField()
    channel_codec__decoder_widths = forms.CharField()
    channel_codec__kernel_size = forms.IntegerField(min_value=1)

    fusion__tau = forms.FloatField(min_value=0.0)
    ranking__mode = forms.ChoiceField(choices=[(mode, mode) for mode in RANKING_MODES])
    ranking__epsilon = forms.FloatField()
    crop__ratio = forms.FloatField(max_value=1.0, help_text='Fraction of feature dimensions kept.')
    ortho__u1 = forms.CharField()
    ortho__u2 = forms.CharField()

    channel__mode = forms.ChoiceField(choices=[(mode, mode) for mode in CHANNEL_MODES])
    channel__b0 = forms.FloatField()
    channel__m = forms.FloatField()
    channel__omega = forms.FloatField(min_value=0.0)
    channel__equalize = forms.ChoiceField(choices=ON_OFF)

    train__batch_size = forms.IntegerField(min_value=1)
    train__epochs = forms.IntegerField(min_value=0)
    train__learning_rate = forms.FloatField()
    train__combiner = forms.ChoiceField(choices=[(name, name) for name in COMBINERS])
    train__user1_snr = forms.CharField()
    train__user2_snr = forms.CharField()
    train__per_user_decoders = forms.ChoiceField(choices=ON_OFF)

    sweep__workers = forms.IntegerField(min_value=1)

    def _positive(self, name):
        data = self.cleaned_data[name]
        if not data > 0.0:
            raise ValidationError(_('Invalid value - must be positive'))
        return data

    def clean_semantic__feature_dim(self):
        data = self.cleaned_data['semantic__feature_dim']
        if data % 2:
            raise ValidationError(_('Invalid feature dimension - must be even'))
        return data

    def clean_semantic__learning_rate(self):
        return self._positive('semantic__learning_rate')

    def clean_train__learning_rate(self):
        return self._positive('train__learning_rate')

    def clean_ranking__epsilon(self):
        return self._positive('ranking__epsilon')

    def clean_crop__ratio(self):
        return self._positive('crop__ratio')

    def clean_channel__b0(self):
        return self._positive('channel__b0')

    def clean_channel__m(self):
        return self._positive('channel__m')

    def clean_channel_codec__encoder_widths(self):
        return _number_list(self.cleaned_data['channel_codec__encoder_widths'], int, 2)

    def clean_channel_codec__decoder_widths(self):
        return _number_list(self.cleaned_data['channel_codec__decoder_widths'], int, 2)

    def clean_channel_codec__kernel_size(self):
        data = self.cleaned_data['channel_codec__kernel_size']
        if data % 2 == 0:
            raise ValidationError(_('Invalid kernel size - must be odd'))
        return data

    def clean_ortho__u1(self):
        return _number_list(self.cleaned_data['ortho__u1'], float)

    def clean_ortho__u2(self):
        return _number_list(self.cleaned_data['ortho__u2'], float)

    def clean_train__user1_snr(self):
        return _interval(self.cleaned_data['train__user1_snr'])

    def clean_train__user2_snr(self):
        return _interval(self.cleaned_data['train__user2_snr'])

    def clean(self):
        cleaned_data = super().clean()
        u1, u2 = cleaned_data.get('ortho__u1'), cleaned_data.get('ortho__u2')
        if u1 is not None and u2 is not None:
            try:
                cleaned_data['ortho__basis'] = OrthoBasis(u1, u2)
            except ConfigError as exc:
                self.add_error('ortho__u2', str(exc))
        params = [cleaned_data.get(name) for name in ('channel__b0', 'channel__m', 'channel__omega')]
        if None not in params:
            cleaned_data['channel__params'] = SrParams(*params)
        # Remember to always return the cleaned data.
        return cleaned_data

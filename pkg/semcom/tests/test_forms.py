from django.conf import settings
from django.test import SimpleTestCase

from ..channel import SrParams
from ..forms import ExperimentConfigForm, config_key, field_name


def default_data(**changes):
    data = {field_name(key): value for key, value in settings.SMDMA_DEFAULTS.items()}
    data.update(changes)
    return data


class ExperimentConfigFormTest(SimpleTestCase):
    def test_field_names_map_to_config_keys(self):
        self.assertEqual(field_name('channel_codec.encoder_widths'), 'channel_codec__encoder_widths')
        self.assertEqual(config_key('train__user1_snr'), 'train.user1_snr')

    def test_every_default_key_has_a_field(self):
        form = ExperimentConfigForm()
        self.assertEqual(set(form.fields), {field_name(key) for key in settings.SMDMA_DEFAULTS})

    def test_seed_field_label_and_help_text(self):
        form = ExperimentConfigForm()
        self.assertTrue(form.fields['seed__base'].label is None or form.fields['seed__base'].label == 'seed base')
        self.assertEqual(form.fields['seed__base'].help_text, 'Base seed for every random stream.')

    def test_defaults_are_valid(self):
        form = ExperimentConfigForm(data=default_data())
        self.assertTrue(form.is_valid())
        self.assertEqual(form.cleaned_data['channel__params'], SrParams())
        self.assertEqual(form.cleaned_data['train__user1_snr'], (-10.0, 0.0))
        self.assertEqual(form.cleaned_data['channel_codec__encoder_widths'], (64, 128))
        self.assertEqual(form.cleaned_data['ortho__basis'].q, 4)

    def test_odd_feature_dimension(self):
        form = ExperimentConfigForm(data=default_data(semantic__feature_dim='63'))
        self.assertFalse(form.is_valid())
        self.assertIn('semantic__feature_dim', form.errors)

    def test_non_orthogonal_basis(self):
        form = ExperimentConfigForm(data=default_data(ortho__u2='0.5,-0.5,0.5,-0.5'))
        self.assertFalse(form.is_valid())
        self.assertIn('ortho__u2', form.errors)

    def test_ratio_must_be_positive_and_at_most_one(self):
        self.assertFalse(ExperimentConfigForm(data=default_data(crop__ratio='0')).is_valid())
        self.assertFalse(ExperimentConfigForm(data=default_data(crop__ratio='1.5')).is_valid())
        self.assertTrue(ExperimentConfigForm(data=default_data(crop__ratio='1')).is_valid())

    def test_snr_range_order(self):
        form = ExperimentConfigForm(data=default_data(train__user2_snr='10:0'))
        self.assertFalse(form.is_valid())
        form = ExperimentConfigForm(data=default_data(train__user2_snr='ten'))
        self.assertFalse(form.is_valid())

    def test_channel_codec_widths(self):
        self.assertFalse(ExperimentConfigForm(data=default_data(channel_codec__decoder_widths='64')).is_valid())
        self.assertFalse(ExperimentConfigForm(data=default_data(channel_codec__kernel_size='4')).is_valid())

    def test_unknown_choice(self):
        self.assertFalse(ExperimentConfigForm(data=default_data(channel__mode='rayleigh')).is_valid())
        self.assertFalse(ExperimentConfigForm(data=default_data(train__combiner='median')).is_valid())

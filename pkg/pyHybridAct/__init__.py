# Copyright 2026 The pyHybridAct Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from .common import *
from .activations import *
from .gradcheck import *
from .datasets import *
from .network import *
from .experiments import *
from .bench import *

import logging

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

name = "pyHybridAct"
__version__ = "0.1.0"

# divbound package
